// The per-subgraph Nibble state: rounds, color sequences, failed edges and
// how an insertion propagates to later rounds.
//
// cargo run --example nibble_internals

use std::error::Error;

use dyncolor::nibble::{insertion_update, static_nibble};
use dyncolor::{DynGraph, Edge, NibbleConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let config = NibbleConfig {
        rounds: 3,
        seq_len: 3,
        palette_size: 3,
    };
    // path 0-1-2-3 with hand-picked rounds and sequences
    let g = DynGraph::from_edges(5, 3, [Edge::of(0, 1), Edge::of(1, 2), Edge::of(2, 3)])?;
    let draw = |e: Edge| match (e.u(), e.v()) {
        (0, 1) => (2, vec![1, 2, 3]),
        (1, 2) => (3, vec![1, 2, 3]),
        _ => (3, vec![2, 1, 3]),
    };
    let mut state = static_nibble(&g, config, draw);
    for e in g.sorted_edges() {
        println!(
            "{e}: round {} color {:?} failed {}",
            state.round(e)?,
            state.color_query(e)?,
            state.failed_edge_query(e)?
        );
    }

    // a round-1 edge taking color 1 at node 1 pushes (0, 1) and (1, 2) along
    let dirty = insertion_update(&mut state, Edge::of(1, 4), 1, vec![1, 3, 2])?;
    println!("insert (1, 4) in round 1 changed:");
    for e in dirty.edges() {
        println!("  {e}: {:?} -> {:?}", dirty.prev_color(e).flatten(), state.color_query(e)?);
    }
    state.audit()?;
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
