//! Tabular output: per-instance result rows, iteration traces and
//! cross-family comparisons.

use std::fmt::Write as _;

use serde::Serialize;

use crate::costfn::CostFunction;
use crate::error::Result;
use crate::instance::Instance;
use crate::lagrangian::{solve, SolveReport, SolverConfig};

pub const REPORT_HEADER: &str = "Instance,# Service Facilities,# Customers,Total Cost,\
Opening Cost,Serving Cost,Accessing Cost,Waiting Cost,# Iterations,CPU time(ms),\
Error Tolerance,# Open Facilities,Average Service Capacity";

pub const TRACE_HEADER: &str =
    "iteration,lower_bound,upper_bound,best_upper_bound,alpha,subgradient_norm";

pub const COMPARE_HEADER: &str =
    "Instance,Cost Family,Total Cost,Waiting Share,# Open Facilities,Average Service Capacity";

/// One result line in the layout of the published result tables.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub instance: String,
    pub facilities: usize,
    pub customers: usize,
    pub total_cost: f64,
    /// Opening, serving, access and waiting shares in percent.
    pub shares: [f64; 4],
    pub iterations: usize,
    /// `None` when timing is suppressed for reproducible output.
    pub cpu_ms: Option<u128>,
    pub gap: f64,
    pub open_facilities: usize,
    pub average_capacity: f64,
}

impl ReportRow {
    pub fn new(name: &str, inst: &Instance, report: &SolveReport, timing: bool) -> Self {
        ReportRow {
            instance: name.to_string(),
            facilities: inst.n_facilities(),
            customers: inst.n_customers(),
            total_cost: report.breakdown.total,
            shares: report.breakdown.shares(),
            iterations: report.iterations,
            cpu_ms: timing.then_some(report.elapsed.as_millis()),
            gap: report.gap,
            open_facilities: report.solution.open_count(),
            average_capacity: report.solution.average_capacity(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut line = format!(
            "{},{},{},{:.1}",
            self.instance, self.facilities, self.customers, self.total_cost
        );
        for share in self.shares {
            let _ = write!(line, ",{}%", round_half_up(share));
        }
        let cpu = self.cpu_ms.map_or_else(|| "-".to_string(), |ms| ms.to_string());
        let _ = write!(
            line,
            ",{},{},{},{},{:.0}",
            self.iterations,
            cpu,
            format_gap(self.gap),
            self.open_facilities,
            self.average_capacity
        );
        line
    }
}

fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

fn format_gap(gap: f64) -> String {
    if gap.is_finite() {
        format!("{gap:.3}")
    } else {
        "inf".to_string()
    }
}

/// Full table with header, one row per entry.
pub fn report_table(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

/// Per-iteration bounds, step size and subgradient norm.
///
/// Floats use the shortest representation that round-trips, so identical
/// runs give identical bytes.
pub fn trace_csv(report: &SolveReport) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for row in &report.trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.iteration,
            row.lower_bound,
            row.upper_bound,
            row.best_upper_bound,
            row.alpha,
            row.subgradient_norm
        );
    }
    out
}

/// The three built-in families with their default operating costs.
pub fn builtin_families() -> [CostFunction; 3] {
    [
        CostFunction::Linear,
        CostFunction::SquareRoot,
        CostFunction::Fractional,
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub instance: String,
    pub family: String,
    pub total_cost: f64,
    /// Waiting cost share in percent.
    pub waiting_share: f64,
    pub open_facilities: usize,
    pub average_capacity: f64,
}

impl CompareRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{:.1},{}%,{},{:.0}",
            self.instance,
            self.family,
            self.total_cost,
            round_half_up(self.waiting_share),
            self.open_facilities,
            self.average_capacity
        )
    }
}

/// Solves the same instance under each built-in family.
pub fn compare_families(
    name: &str,
    inst: &Instance,
    cfg: &SolverConfig,
) -> Result<Vec<(CompareRow, SolveReport)>> {
    builtin_families()
        .into_iter()
        .map(|family| {
            let c = family.default_operating_cost().expect("built-in family");
            let variant = inst.with_family(family.clone(), c)?;
            let report = solve(&variant, cfg)?;
            let row = CompareRow {
                instance: name.to_string(),
                family: family.name().to_string(),
                total_cost: report.breakdown.total,
                waiting_share: report.breakdown.shares()[3],
                open_facilities: report.solution.open_count(),
                average_capacity: report.solution.average_capacity(),
            };
            Ok((row, report))
        })
        .collect()
}

pub fn compare_table(rows: &[CompareRow]) -> String {
    let mut out = String::from(COMPARE_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}
