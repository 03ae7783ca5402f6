// Generate each stream kind, round-trip it through text and run it.
//
// cargo run --release --example stream_files

use std::error::Error;

use dyncolor::harness::{run_stream, RunOptions};
use dyncolor::stream::{generate, GenSpec, StreamFile, StreamKind};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let kinds = [
        StreamKind::Random,
        StreamKind::Forest,
        StreamKind::Regularish,
        StreamKind::Churn,
    ];
    for kind in kinds {
        let stream = generate(&GenSpec::new(kind, 500, 16, 2_000, 1))?;
        let text = stream.to_text();
        assert_eq!(StreamFile::parse(&text)?, stream);

        let mut opts = RunOptions::new(0.3, 1);
        opts.oracle_check = Some(250);
        let m = run_stream(&stream, &opts)?;
        println!(
            "{kind:?}: {} updates, {} deletes, mean recourse {:.3}, peak colors {}",
            m.updates,
            stream.deletions(),
            m.mean_recourse,
            m.colors_used_peak
        );
    }

    let bad = "n 4 delta 2\n+ 0 1\n+ 1\n";
    let err = StreamFile::parse(bad).unwrap_err();
    println!("rejected: {err}");
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
