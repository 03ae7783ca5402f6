// Insert and delete edges one at a time and watch what each update changes.
//
// cargo run --example dynamic_updates

use std::error::Error;

use dyncolor::{Edge, Engine, Params};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let params = Params::derive(0.3, 4, 1.0)?;
    let mut engine = Engine::new(8, params, 2024);

    // a 4-cycle with both chords, then a pendant edge
    let edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3), (3, 4)];
    for (a, b) in edges {
        let r = engine.insert(Edge::of(a, b))?;
        println!(
            "+ {a} {b}: color {:>2}  recourse {}  tentative changes {}  H {:+}",
            engine.color_of(Edge::of(a, b))?,
            r.total_recourse,
            r.dirty_tentative,
            r.h_inserts as i64 - r.h_deletes as i64,
        );
    }
    for (a, b) in [(0, 2), (1, 2)] {
        let r = engine.delete(Edge::of(a, b))?;
        println!("- {a} {b}: recourse {}", r.total_recourse);
    }

    let snapshot = engine.snapshot();
    for (e, c) in &snapshot {
        println!("{e} -> {c}");
    }
    println!(
        "{} edges, {} colors, {} in the failed-edge graph",
        engine.graph().edge_count(),
        engine.colors_used(),
        engine.failed_count()
    );
    dyncolor::oracle::check_engine(&engine)?;
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
