//! One facility's Lagrangian subproblem: the sort-and-scan inner solve per
//! tangent piece, and the fast single-sort route that covers all pieces.
//!
//!     cargo run --example facility_subproblem

use eos_ssd::lagrangian::instance_linearization;
use eos_ssd::subproblem::{piece_constants, solve_facility, solve_inner};
use eos_ssd::{generate_instance, CostFunction, SolverConfig};

fn main() -> eos_ssd::Result<()> {
    let inst = generate_instance(3, 12, 5, CostFunction::SquareRoot);
    let lin = instance_linearization(&inst, &SolverConfig::default())?;

    // multipliers a little above each customer's cheapest linear cost
    let u: Vec<f64> = (0..inst.n_customers())
        .map(|j| {
            let lambda = inst.customers()[j].demand_rate;
            (0..inst.n_facilities())
                .map(|i| (inst.facilities()[i].serving_cost + inst.access(i, j)) * lambda)
                .fold(f64::INFINITY, f64::min)
                * 1.4
        })
        .collect();

    let facility = 0;
    println!("{} pieces; per-piece optima for facility {facility}:", lin.len());
    for k in (0..lin.len()).step_by((lin.len() / 6).max(1)) {
        let pc = piece_constants(&inst, &lin, facility, k);
        let inner = solve_inner(&pc, &u);
        println!(
            "  piece {k:>3} (tangent {:>10.1}): z = {:>9.2}, selects {:?}",
            lin.pieces()[k].tangent,
            pc.p + inner.value,
            inner.selection
        );
    }

    let best = solve_facility(&inst, &lin, facility, &u);
    println!(
        "best piece {}: z = {:.2}, open {}, capacity {:.2}, customers {:?}",
        best.piece, best.objective, best.open, best.capacity, best.selected
    );
    Ok(())
}
