// Mean recourse and update time on churn streams as n grows.
//
// cargo run --release --example recourse_scaling [updates]

use std::error::Error;

use dyncolor::harness::{run_stream, RunOptions};
use dyncolor::stream::{generate, GenSpec, StreamKind};

/// CSV rows `n,mean_recourse,ns_per_update` for each `n`.
pub fn scaling(ns: &[usize], updates: usize, seed: u64) -> Result<Vec<String>, Box<dyn Error>> {
    let mut rows = Vec::new();
    for &n in ns {
        let stream = generate(&GenSpec::new(StreamKind::Churn, n, 64, updates, seed).delete_fraction(0.3))?;
        let m = run_stream(&stream, &RunOptions::new(0.3, seed))?;
        rows.push(format!("{n},{:.4},{:.0}", m.mean_recourse, m.timing.ns_per_update_mean));
    }
    Ok(rows)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    println!("n,mean_recourse,ns_per_update");
    for row in scaling(&[1_000, 10_000], 3_000, 1)? {
        println!("{row}");
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    let updates = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(50_000);
    println!("n,mean_recourse,ns_per_update");
    for row in scaling(&[1_000, 10_000, 100_000], updates, 1)? {
        println!("{row}");
    }
    Ok(())
}
