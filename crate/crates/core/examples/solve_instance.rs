//! Solves one instance with the default protocol and prints the result row,
//! the cost breakdown and the start and end of the bound trace.
//!
//!     cargo run --release --example solve_instance -- [path/to/instance.json]

use eos_ssd::report::{ReportRow, REPORT_HEADER};
use eos_ssd::{generate_instance, read_instance, solve, CostFunction, SolverConfig};

fn main() -> eos_ssd::Result<()> {
    let (name, inst) = match std::env::args().nth(1) {
        Some(path) => (path.clone(), read_instance(&path)?),
        None => ("generated".to_string(), generate_instance(10, 50, 7, CostFunction::SquareRoot)),
    };
    let report = solve(&inst, &SolverConfig::default())?;

    println!("{REPORT_HEADER}");
    println!("{}", ReportRow::new(&name, &inst, &report, true).to_csv());
    let b = report.breakdown;
    println!(
        "\nopening {:.1}, serving {:.1}, access {:.1}, waiting {:.1}, total {:.1}",
        b.opening, b.serving, b.access, b.waiting, b.total
    );
    println!("{:?} after {} iterations, gap {:.4}", report.termination, report.iterations, report.gap);

    println!("\n  iter        Lb          Ub     best Ub      alpha");
    let n = report.trace.len();
    for row in report.trace.iter().enumerate().filter(|(k, _)| *k < 5 || *k + 3 >= n).map(|(_, r)| r) {
        println!(
            "{:>6} {:>11.2} {:>11.2} {:>11.2} {:>10.3e}",
            row.iteration, row.lower_bound, row.upper_bound, row.best_upper_bound, row.alpha
        );
    }
    for (i, open) in report.solution.open.iter().enumerate() {
        if *open {
            let customers = report.solution.assign.iter().filter(|a| **a == Some(i)).count();
            println!("facility {i}: capacity {:.1}, {customers} customers", report.solution.capacity[i]);
        }
    }
    Ok(())
}
