//! Cross-checks the solver against exhaustive enumeration on small
//! instances, both on the tangent envelope and on the true cost curve.
//!
//!     cargo run --release --example oracle_check

use eos_ssd::lagrangian::{instance_linearization, solve_with};
use eos_ssd::report::builtin_families;
use eos_ssd::{generate_instance, oracle_optimum, SolverConfig};

fn main() -> eos_ssd::Result<()> {
    let cfg = SolverConfig::default();
    println!("family        size  best Lb     envelope opt  exact opt    solver (exact)  excess");
    for (k, family) in builtin_families().into_iter().enumerate() {
        for seed in 0..4u64 {
            let inst = generate_instance(3, 6, 100 * k as u64 + seed, family.clone());
            let lin = instance_linearization(&inst, &cfg)?;
            let (lin_opt, _) = oracle_optimum(&inst, &lin, false)?;
            let (exact_opt, _) = oracle_optimum(&inst, &lin, true)?;
            let report = solve_with(&inst, &lin, &cfg)?;
            println!(
                "{:<12} 3x6   {:>10.2}  {:>12.2}  {:>10.2}  {:>14.2}  {:>6.3}%",
                family.name(),
                report.best_lower_bound,
                lin_opt,
                exact_opt,
                report.upper_bound,
                100.0 * (report.upper_bound - exact_opt) / exact_opt
            );
        }
    }
    Ok(())
}
