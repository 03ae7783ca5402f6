// Derived parameters for a grid of epsilon and Delta.
//
// cargo run --example parameter_table

use std::error::Error;

use dyncolor::Params;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    println!("epsilon  Delta        T     K  Delta'  subgraphs  palette  budget");
    for epsilon in [0.5, 0.3, 0.2, 0.1] {
        for delta in [8usize, 64, 1 << 10, 1 << 20] {
            let p = Params::derive(epsilon, delta, 1.0)?;
            println!(
                "{epsilon:>7}  {delta:>7}  {:>5}  {:>4}  {:>6}  {:>9}  {:>7}  {:>6.3e}",
                p.rounds,
                p.seq_len,
                p.delta_prime,
                p.subgraphs,
                p.sub_palette_size,
                p.color_bound()
            );
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
