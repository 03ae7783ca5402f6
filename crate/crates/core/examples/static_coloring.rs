// Color a random graph in one shot and compare against the color budget.
//
// cargo run --release --example static_coloring

use std::error::Error;

use dyncolor::oracle::verify_proper;
use dyncolor::stream::{generate, GenSpec, StreamKind};
use dyncolor::{static_color, Params};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let delta = 32;
    let stream = generate(&GenSpec::new(StreamKind::Regularish, 400, delta, 6_000, 11))?;
    let g = stream.final_graph();

    println!("epsilon  colors  max_color  failed  Delta(H)  budget");
    for epsilon in [0.5, 0.3, 0.2] {
        let params = Params::derive(epsilon, delta, 1.0)?;
        let out = static_color(&g, &params, 7);
        assert!(verify_proper(&out.colors, &g).is_empty());
        assert_eq!(out.colors.len(), g.edge_count());
        println!(
            "{epsilon:>7}  {:>6}  {:>9}  {:>6}  {:>8}  {:>6.0}",
            out.colors_used,
            out.max_color,
            out.failed,
            out.h_max_degree,
            params.color_bound()
        );
    }
    println!("{} edges, max degree {}", g.edge_count(), g.max_degree());
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
