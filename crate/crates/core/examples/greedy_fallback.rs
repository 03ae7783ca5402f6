// The `(2+delta) * max degree` greedy colorer on its own.
//
// cargo run --release --example greedy_fallback

use std::error::Error;

use dyncolor::stream::{generate, GenSpec, StreamKind};
use dyncolor::{GreedyState, UpdateOp};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let stream = generate(&GenSpec::new(StreamKind::Churn, 300, 12, 20_000, 3).delete_fraction(0.45))?;
    for slack in [1.0, 0.5, 0.25] {
        let mut greedy = GreedyState::new(stream.n, slack, 17);
        let mut worst_repair = 0;
        for u in &stream.updates {
            match u.op {
                UpdateOp::Insert => {
                    greedy.greedy_insert(u.edge)?;
                }
                UpdateOp::Delete => worst_repair = worst_repair.max(greedy.greedy_delete(u.edge)?.len()),
            }
        }
        greedy.audit()?;
        let c = greedy.counters();
        println!(
            "delta {slack:<4}  samples/coloring {:.2} (3/delta = {:.0})  repairs <= {worst_repair}  fallbacks {}",
            c.samples as f64 / c.colorings as f64,
            3.0 / slack,
            c.fallbacks
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
