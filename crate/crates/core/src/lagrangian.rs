//! Subgradient ascent on the Lagrangian dual of the single-sourcing
//! constraints, with a repair heuristic supplying feasible upper bounds.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::costfn::{capacity_range, linearize, Linearization};
use crate::error::{Error, Result};
use crate::evaluator::{evaluate, CostBreakdown, Opening};
use crate::instance::{Instance, Solution};
use crate::subproblem::{optimal_capacity, solve_facility, SubproblemResult};

/// Scaling of the subgradient step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepNorm {
    /// `u += alpha (Ub - Lb) / ||v|| * v`
    #[default]
    Plain,
    /// Classical Polyak scaling, `u += alpha (Ub - Lb) / ||v||^2 * v`.
    Squared,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Relative error of the opening-cost linearization.
    pub epsilon: f64,
    /// Stop once `(Ub - Lb) / Lb <= tolerance`.
    pub tolerance: f64,
    pub max_iters: usize,
    pub alpha0: f64,
    /// Halve alpha after this many consecutive iterations without a lower
    /// bound improvement.
    pub stall_window: usize,
    /// Relative lower-bound increase below which an iteration counts as a stall.
    pub stall_threshold: f64,
    pub norm: StepNorm,
    /// Worker threads for the facility subproblems; 1 runs serially.
    pub parallelism: usize,
    /// Linearization range; derived from the instance when `None`.
    pub capacity_range: Option<(f64, f64)>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 0.01,
            tolerance: 0.01,
            max_iters: 10_000,
            alpha0: 0.01,
            stall_window: 10,
            stall_threshold: 1e-6,
            norm: StepNorm::Plain,
            parallelism: 1,
            capacity_range: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be at least 1"));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 < 2.0) {
            return Err(Error::invalid("alpha0", "must lie in (0, 2)"));
        }
        if self.stall_window == 0 {
            return Err(Error::invalid("stall_window", "must be at least 1"));
        }
        if !(self.stall_threshold >= 0.0) {
            return Err(Error::invalid("stall_threshold", "must be non-negative"));
        }
        if self.parallelism == 0 {
            return Err(Error::invalid("parallelism", "must be at least 1"));
        }
        Ok(())
    }
}

/// Mutable state of the dual ascent.
#[derive(Clone, Debug)]
pub struct DualState {
    pub u: Vec<f64>,
    pub alpha: f64,
    pub iteration: usize,
    pub best_ub: f64,
    pub best_solution: Option<Solution>,
    pub best_lb: f64,
    pub lb_history: Vec<f64>,
    /// Iterations since the last lower-bound improvement.
    pub stall: usize,
    stall_window: usize,
    stall_threshold: f64,
    norm: StepNorm,
}

impl DualState {
    /// Zero multipliers, no incumbent.
    pub fn new(n_customers: usize, cfg: &SolverConfig) -> Self {
        DualState {
            u: vec![0.0; n_customers],
            alpha: cfg.alpha0,
            iteration: 0,
            best_ub: f64::INFINITY,
            best_solution: None,
            best_lb: f64::NEG_INFINITY,
            lb_history: Vec::new(),
            stall: 0,
            stall_window: cfg.stall_window,
            stall_threshold: cfg.stall_threshold,
            norm: cfg.norm,
        }
    }

    /// Records a feasible design; keeps it if it beats the incumbent.
    pub fn offer(&mut self, cost: f64, solution: &Solution) -> bool {
        if cost < self.best_ub {
            self.best_ub = cost;
            self.best_solution = Some(solution.clone());
            true
        } else {
            false
        }
    }
}

/// Outcome of a multiplier update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Update {
    /// Multipliers moved by a step of the given subgradient norm.
    Stepped { subgradient_norm: f64 },
    /// Every customer is selected exactly once: the relaxed solution is
    /// feasible and the multipliers were left untouched.
    Feasible,
}

/// Lagrangian bound `sum_i min(0, z_i) + sum_j u_j` and the per-facility
/// responses.
pub fn lower_bound(inst: &Instance, lin: &Linearization, u: &[f64]) -> (f64, Vec<SubproblemResult>) {
    let raw: Vec<SubproblemResult> = (0..inst.n_facilities())
        .map(|i| solve_facility(inst, lin, i, u))
        .collect();
    (bound_value(&raw, u), raw)
}

fn lower_bound_parallel(
    inst: &Instance,
    lin: &Linearization,
    u: &[f64],
    pool: &rayon::ThreadPool,
) -> (f64, Vec<SubproblemResult>) {
    let raw: Vec<SubproblemResult> = pool.install(|| {
        (0..inst.n_facilities())
            .into_par_iter()
            .map(|i| solve_facility(inst, lin, i, u))
            .collect()
    });
    (bound_value(&raw, u), raw)
}

fn bound_value(raw: &[SubproblemResult], u: &[f64]) -> f64 {
    raw.iter().map(SubproblemResult::contribution).sum::<f64>() + u.iter().sum::<f64>()
}

/// `(s + a_ij + c g'_k) / (4 w c g'_k)`, i.e. `q_j / r_j` at piece `k`
/// (the demand rate cancels).
fn assignment_ratio(inst: &Instance, lin: &Linearization, i: usize, k: usize, j: usize) -> f64 {
    let fac = &inst.facilities()[i];
    let marginal = fac.operating_cost * lin.pieces()[k].slope;
    (fac.serving_cost + inst.access(i, j) + marginal) / (4.0 * fac.waiting_cost * marginal)
}

/// Capacity of facility `i` with arrival rate `arrival`, using the piece that
/// minimizes the linearized facility cost. Returns `(capacity, piece)`.
fn repair_capacity(inst: &Instance, lin: &Linearization, i: usize, arrival: f64) -> (f64, usize) {
    let fac = &inst.facilities()[i];
    let mut best = (f64::INFINITY, 0);
    for (k, piece) in lin.pieces().iter().enumerate() {
        let marginal = fac.operating_cost * piece.slope;
        let cost = fac.operating_cost * piece.intercept
            + marginal * arrival
            + 2.0 * (fac.waiting_cost * marginal * arrival).sqrt();
        if cost < best.0 {
            best = (cost, k);
        }
    }
    let k = best.1;
    let marginal = fac.operating_cost * lin.pieces()[k].slope;
    (optimal_capacity(arrival, fac.waiting_cost, marginal), k)
}

/// Builds a feasible design from the relaxed responses.
///
/// Facilities open in `raw` stay open. A customer selected by several of them
/// goes to the one with the smallest `q/r` ratio at that facility's piece; an
/// unselected customer goes to the open facility with the smallest ratio.
/// When nothing is open, the single facility that serves everyone most
/// cheaply (exact cost) is opened. Empty facilities are closed and every
/// capacity is re-optimized for its final customer set.
pub fn repair(inst: &Instance, lin: &Linearization, raw: &[SubproblemResult]) -> Solution {
    let n = inst.n_facilities();
    let m = inst.n_customers();
    let mut assign: Vec<Option<usize>> = vec![None; m];

    let open: Vec<usize> = raw.iter().filter(|r| r.open).map(|r| r.facility).collect();
    if open.is_empty() {
        return best_single_facility(inst, lin);
    }

    let mut best_ratio = vec![f64::INFINITY; m];
    for res in raw.iter().filter(|r| r.open) {
        for &j in &res.selected {
            let ratio = assignment_ratio(inst, lin, res.facility, res.piece, j);
            if ratio < best_ratio[j] {
                best_ratio[j] = ratio;
                assign[j] = Some(res.facility);
            }
        }
    }
    for j in 0..m {
        if assign[j].is_some() {
            continue;
        }
        for &i in &open {
            let ratio = assignment_ratio(inst, lin, i, raw[i].piece, j);
            if ratio < best_ratio[j] {
                best_ratio[j] = ratio;
                assign[j] = Some(i);
            }
        }
    }

    design_from_assignment(inst, lin, assign, n)
}

fn design_from_assignment(
    inst: &Instance,
    lin: &Linearization,
    assign: Vec<Option<usize>>,
    n: usize,
) -> Solution {
    let mut arrival = vec![0.0; n];
    for (j, slot) in assign.iter().enumerate() {
        if let Some(i) = *slot {
            arrival[i] += inst.customers()[j].demand_rate;
        }
    }
    let mut open = vec![false; n];
    let mut capacity = vec![0.0; n];
    for i in 0..n {
        if arrival[i] > 0.0 {
            open[i] = true;
            capacity[i] = repair_capacity(inst, lin, i, arrival[i]).0;
        }
    }
    Solution {
        open,
        assign,
        capacity,
    }
}

fn best_single_facility(inst: &Instance, lin: &Linearization) -> Solution {
    let n = inst.n_facilities();
    let m = inst.n_customers();
    let mut best: Option<(f64, Solution)> = None;
    for i in 0..n {
        let sol = design_from_assignment(inst, lin, vec![Some(i); m], n);
        let cost = evaluate(inst, &sol, Opening::Exact)
            .map(|c| c.total)
            .unwrap_or(f64::INFINITY);
        if best.as_ref().is_none_or(|b| cost < b.0) {
            best = Some((cost, sol));
        }
    }
    best.expect("at least one facility").1
}

/// Subgradient step on the multipliers.
///
/// `v_j = 1 - (number of open facilities selecting j)`. The step length uses
/// the incumbent upper bound, so `state.best_ub` must already include this
/// iteration's repair. Alpha halves after `stall_window` consecutive
/// iterations in which `lb` fails to improve the best bound by more than
/// `stall_threshold` (relative).
pub fn update_multipliers(state: &mut DualState, raw: &[SubproblemResult], lb: f64) -> Update {
    state.lb_history.push(lb);
    state.iteration += 1;
    let improved = if state.best_lb.is_finite() {
        lb > state.best_lb + state.stall_threshold * state.best_lb.abs()
    } else {
        true
    };
    if improved {
        state.best_lb = lb;
        state.stall = 0;
    } else {
        state.stall += 1;
    }

    let mut v = vec![1.0; state.u.len()];
    for res in raw.iter().filter(|r| r.open) {
        for &j in &res.selected {
            v[j] -= 1.0;
        }
    }
    let norm_sq: f64 = v.iter().map(|x| x * x).sum();
    if norm_sq == 0.0 {
        return Update::Feasible;
    }
    let norm = norm_sq.sqrt();
    let scale = match state.norm {
        StepNorm::Plain => norm,
        StepNorm::Squared => norm_sq,
    };
    let step = state.alpha * (state.best_ub - lb) / scale;
    for (u, g) in state.u.iter_mut().zip(&v) {
        *u += step * g;
    }

    if state.stall >= state.stall_window {
        state.alpha *= 0.5;
        state.stall = 0;
    }
    Update::Stepped {
        subgradient_norm: norm,
    }
}

/// `(ub - lb) / lb`, or infinity when `lb <= 0`.
pub fn relative_gap(ub: f64, lb: f64) -> f64 {
    if lb > 0.0 {
        (ub - lb) / lb
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The relative gap dropped to the tolerance.
    Converged,
    /// The relaxed solution was itself feasible (zero subgradient).
    FeasibleRelaxation,
    IterationLimit,
}

/// One dual iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub lower_bound: f64,
    /// Exact cost of this iteration's repaired design.
    pub upper_bound: f64,
    pub best_upper_bound: f64,
    pub alpha: f64,
    /// Norm of the subgradient; 0 on the last row when no step was taken.
    pub subgradient_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub termination: Termination,
    /// `(min Ub - Lb_final) / Lb_final`.
    pub gap: f64,
    pub iterations: usize,
    #[serde(serialize_with = "as_millis")]
    pub elapsed: Duration,
    pub final_lower_bound: f64,
    pub best_lower_bound: f64,
    pub upper_bound: f64,
    pub pieces: usize,
    #[serde(skip)]
    pub solution: Solution,
    pub breakdown: CostBreakdown,
    pub trace: Vec<TraceRow>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.termination != Termination::IterationLimit
    }
}

fn as_millis<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

/// Linearizes the instance's cost family as configured.
pub fn instance_linearization(inst: &Instance, cfg: &SolverConfig) -> Result<Linearization> {
    let (lower, upper) = cfg.capacity_range.unwrap_or_else(|| capacity_range(inst));
    linearize(inst.cost_function(), cfg.epsilon, lower, upper)
}

/// Runs the dual ascent until the gap closes or the iteration budget ends.
pub fn solve(inst: &Instance, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let lin = instance_linearization(inst, cfg)?;
    solve_with(inst, &lin, cfg)
}

/// [`solve`] with a caller-supplied linearization.
pub fn solve_with(inst: &Instance, lin: &Linearization, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let started = Instant::now();
    let pool = if cfg.parallelism > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.parallelism)
                .build()
                .map_err(|e| Error::invalid("parallelism", e.to_string()))?,
        )
    } else {
        None
    };

    let mut state = DualState::new(inst.n_customers(), cfg);
    let mut trace = Vec::new();
    let mut termination = Termination::IterationLimit;
    let mut lb = f64::NEG_INFINITY;

    for t in 0..cfg.max_iters {
        let (bound, raw) = match &pool {
            Some(pool) => lower_bound_parallel(inst, lin, &state.u, pool),
            None => lower_bound(inst, lin, &state.u),
        };
        lb = bound;
        let candidate = repair(inst, lin, &raw);
        let ub = evaluate(inst, &candidate, Opening::Exact)?.total;
        state.offer(ub, &candidate);

        let mut row = TraceRow {
            iteration: t + 1,
            lower_bound: lb,
            upper_bound: ub,
            best_upper_bound: state.best_ub,
            alpha: state.alpha,
            subgradient_norm: 0.0,
        };
        if relative_gap(state.best_ub, lb) <= cfg.tolerance {
            termination = Termination::Converged;
            trace.push(row);
            break;
        }
        match update_multipliers(&mut state, &raw, lb) {
            Update::Feasible => {
                termination = Termination::FeasibleRelaxation;
                trace.push(row);
                break;
            }
            Update::Stepped { subgradient_norm } => {
                row.subgradient_norm = subgradient_norm;
                trace.push(row);
            }
        }
    }

    let solution = state
        .best_solution
        .clone()
        .expect("repair always yields a feasible design");
    let breakdown = evaluate(inst, &solution, Opening::Exact)?;
    let best_lb = trace
        .iter()
        .map(|r| r.lower_bound)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SolveReport {
        termination,
        gap: relative_gap(state.best_ub, lb),
        iterations: trace.len(),
        elapsed: started.elapsed(),
        final_lower_bound: lb,
        best_lower_bound: best_lb,
        upper_bound: state.best_ub,
        pieces: lin.len(),
        solution,
        breakdown,
        trace,
    })
}
