//! Service system design with economies of scale.
//!
//! Chooses which facilities to open, their service capacities and the
//! customer assignment, minimizing opening, serving, access and M/M/1
//! waiting costs when the opening cost `f + c g(mu)` is concave in capacity.
//!
//! The solver replaces `g` by a tangent-line envelope with bounded relative
//! error ([`costfn`]), dualizes the single-sourcing constraints, solves each
//! facility's subproblem exactly by a sort-and-scan ([`subproblem`]), and
//! runs subgradient ascent with a repair heuristic for upper bounds
//! ([`lagrangian`]).
//!
//! ```no_run
//! use eos_ssd::{generate_instance, solve, CostFunction, SolverConfig};
//!
//! let inst = generate_instance(10, 50, 1, CostFunction::SquareRoot);
//! let report = solve(&inst, &SolverConfig::default()).unwrap();
//! println!("cost {:.1}, gap {:.3}", report.upper_bound, report.gap);
//! ```

// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod costfn;
pub mod error;
pub mod evaluator;
pub mod instance;
pub mod lagrangian;
pub mod oracle;
pub mod report;
pub mod subproblem;

pub use costfn::{capacity_range, linearize, CostFunction, Linearization, Piece};
pub use error::{Error, Result};
pub use evaluator::{evaluate, mm1_wait, CostBreakdown, Opening};
pub use instance::{
    generate_instance, read_instance, write_instance, Customer, Facility, Instance, Solution,
};
pub use lagrangian::{solve, SolveReport, SolverConfig, StepNorm, Termination};
pub use oracle::oracle_optimum;
