// Replay a churn stream and compare the engine with a from-scratch
// recomputation after every update.
//
// cargo run --release --example oracle_check

use std::error::Error;

use dyncolor::oracle::{check_engine, recourse_diff, verify_proper};
use dyncolor::stream::{generate, GenSpec, StreamKind};
use dyncolor::{Engine, Params};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let stream = generate(&GenSpec::new(StreamKind::Churn, 60, 8, 800, 5).delete_fraction(0.4))?;
    let params = Params::derive(0.3, stream.delta, 1.0)?;
    let mut engine = Engine::new(stream.n, params, 99);

    let mut before = engine.snapshot();
    for (k, u) in stream.updates.iter().enumerate() {
        let report = engine.apply_update(u.op, u.edge)?;
        let after = engine.snapshot();
        if let Err(m) = check_engine(&engine) {
            return Err(format!("update {}: {m}", k + 1).into());
        }
        assert!(verify_proper(&after, engine.graph()).is_empty());
        assert_eq!(recourse_diff(&before, &after), report.total_recourse);
        before = after;
    }
    println!(
        "{} updates agree with the from-scratch oracle ({} live edges, {} failed)",
        stream.updates.len(),
        engine.graph().edge_count(),
        engine.failed_count()
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
