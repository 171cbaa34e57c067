//! Solves the generated 27-instance suite under all three cost families and
//! prints one result row per instance plus per-family averages.
//!
//!     cargo run --release --example solve_suite [seed]

use eos_ssd::instance::{generate_suite, GeneratorConfig};
use eos_ssd::report::{builtin_families, ReportRow, REPORT_HEADER};
use eos_ssd::{solve, SolverConfig};

fn main() -> eos_ssd::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2012);
    let cfg = SolverConfig::default();

    for family in builtin_families() {
        println!("# {}", family.name());
        println!("{REPORT_HEADER}");
        let suite = generate_suite(&GeneratorConfig::default(), seed, &family);
        let (mut open, mut cap, mut wait, mut converged) = (0.0, 0.0, 0.0, 0);
        for entry in &suite {
            let report = solve(&entry.instance, &cfg)?;
            let row = ReportRow::new(&entry.name, &entry.instance, &report, true);
            println!("{}", row.to_csv());
            open += row.open_facilities as f64;
            cap += row.average_capacity;
            wait += row.shares[3];
            converged += usize::from(report.converged());
        }
        let n = suite.len() as f64;
        println!(
            "# mean open {:.2}, mean capacity {:.1}, mean waiting share {:.1}%, converged {}/{}\n",
            open / n,
            cap / n,
            wait / n,
            converged,
            suite.len()
        );
    }
    Ok(())
}
