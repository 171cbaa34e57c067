//! Solves one instance under the linear, square-root and fractional opening
//! costs and prints total cost, waiting share, open facilities and average
//! capacity side by side.
//!
//!     cargo run --release --example compare_families -- [seed]

use eos_ssd::report::{compare_families, compare_table};
use eos_ssd::{generate_instance, CostFunction, SolverConfig};

fn main() -> eos_ssd::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let inst = generate_instance(20, 80, seed, CostFunction::Linear);
    let rows: Vec<_> = compare_families("generated", &inst, &SolverConfig::default())?
        .into_iter()
        .map(|(row, _)| row)
        .collect();
    print!("{}", compare_table(&rows));
    Ok(())
}
