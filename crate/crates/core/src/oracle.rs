//! Exhaustive optimum for desk-sized instances, used to check the solver.

use crate::costfn::{CostFunction, Linearization};
use crate::error::{Error, Result};
use crate::instance::{Instance, Solution};
use crate::subproblem::optimal_capacity;

pub const MAX_FACILITIES: usize = 4;
pub const MAX_CUSTOMERS: usize = 8;

const GRID_POINTS: usize = 10_000;
const GOLDEN_STEPS: usize = 200;

/// Global optimum by enumerating all `|I|^|J|` assignments.
///
/// Each non-empty facility gets its best capacity: the closed form per
/// tangent piece when `exact` is false, a grid-plus-golden-section search of
/// `c g(mu) + w Lambda / (mu - Lambda)` over `(Lambda, upper]` when `exact` is
/// true (`upper` is the linearization range end, widened to at least
/// `2 Lambda + 1`). Ties keep the first assignment in lexicographic order.
pub fn oracle_optimum(inst: &Instance, lin: &Linearization, exact: bool) -> Result<(f64, Solution)> {
    let n = inst.n_facilities();
    let m = inst.n_customers();
    if n > MAX_FACILITIES || m > MAX_CUSTOMERS {
        return Err(Error::TooLarge {
            facilities: n,
            customers: m,
            max_facilities: MAX_FACILITIES,
            max_customers: MAX_CUSTOMERS,
        });
    }

    // best (cost, capacity) of facility i serving exactly the customers in mask
    let masks = 1usize << m;
    let mut table = vec![(0.0, 0.0); n * masks];
    for i in 0..n {
        for mask in 1..masks {
            table[i * masks + mask] = facility_cost(inst, lin, i, mask, exact);
        }
    }

    let mut best_cost = f64::INFINITY;
    let mut best_assign = vec![0usize; m];
    let mut assign = vec![0usize; m];
    let mut facility_mask = vec![0usize; n];
    loop {
        facility_mask.iter_mut().for_each(|x| *x = 0);
        for (j, &i) in assign.iter().enumerate() {
            facility_mask[i] |= 1 << j;
        }
        let cost: f64 = facility_mask
            .iter()
            .enumerate()
            .filter(|(_, &mask)| mask != 0)
            .map(|(i, &mask)| table[i * masks + mask].0)
            .sum();
        if cost < best_cost {
            best_cost = cost;
            best_assign.copy_from_slice(&assign);
        }
        // odometer, last customer fastest
        let mut pos = m;
        loop {
            if pos == 0 {
                return Ok((best_cost, build(inst, &best_assign, &table, masks)));
            }
            pos -= 1;
            assign[pos] += 1;
            if assign[pos] < n {
                break;
            }
            assign[pos] = 0;
        }
    }
}

fn build(inst: &Instance, assign: &[usize], table: &[(f64, f64)], masks: usize) -> Solution {
    let n = inst.n_facilities();
    let mut facility_mask = vec![0usize; n];
    for (j, &i) in assign.iter().enumerate() {
        facility_mask[i] |= 1 << j;
    }
    let open: Vec<bool> = facility_mask.iter().map(|&mask| mask != 0).collect();
    let capacity = facility_mask
        .iter()
        .enumerate()
        .map(|(i, &mask)| if mask != 0 { table[i * masks + mask].1 } else { 0.0 })
        .collect();
    Solution {
        open,
        assign: assign.iter().map(|&i| Some(i)).collect(),
        capacity,
    }
}

fn facility_cost(inst: &Instance, lin: &Linearization, i: usize, mask: usize, exact: bool) -> (f64, f64) {
    let fac = &inst.facilities()[i];
    let mut arrival = 0.0;
    let mut linear_terms = 0.0;
    for (j, cust) in inst.customers().iter().enumerate() {
        if mask >> j & 1 == 1 {
            arrival += cust.demand_rate;
            linear_terms += (fac.serving_cost + inst.access(i, j)) * cust.demand_rate;
        }
    }
    let (capacity, variable) = if exact {
        let mu = exact_capacity(
            inst.cost_function(),
            fac.operating_cost,
            fac.waiting_cost,
            arrival,
            lin.upper(),
        );
        let cost = fac.operating_cost * inst.cost_function().value(mu)
            + fac.waiting_cost * arrival / (mu - arrival);
        (mu, cost)
    } else {
        let mut best = (0.0, f64::INFINITY);
        for piece in lin.pieces() {
            let marginal = fac.operating_cost * piece.slope;
            let mu = optimal_capacity(arrival, fac.waiting_cost, marginal);
            let cost = fac.operating_cost * piece.intercept
                + marginal * mu
                + fac.waiting_cost * arrival / (mu - arrival);
            if cost < best.1 {
                best = (mu, cost);
            }
        }
        best
    };
    (fac.fixed_cost + linear_terms + variable, capacity)
}

/// Global minimizer of `c g(mu) + w Lambda / (mu - Lambda)` over
/// `(Lambda, max(upper, 2 Lambda + 1)]`.
///
/// The objective is a concave plus a convex term and may have several basins,
/// so a geometric grid in `mu - Lambda` locates every grid-local minimum and
/// golden-section search refines each one.
pub fn exact_capacity(g: &CostFunction, operating: f64, waiting: f64, arrival: f64, upper: f64) -> f64 {
    let cap = upper.max(2.0 * arrival + 1.0);
    let h = |delta: f64| operating * g.value(arrival + delta) + waiting * arrival / delta;
    let lo = 1e-9 * arrival.max(1.0);
    let hi = cap - arrival;
    let ratio = (hi / lo).ln() / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|k| if k + 1 == GRID_POINTS { hi } else { lo * (ratio * k as f64).exp() })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&d| h(d)).collect();

    let mut best = (values[GRID_POINTS - 1], grid[GRID_POINTS - 1]);
    for k in 0..GRID_POINTS {
        let left_ok = k == 0 || values[k] <= values[k - 1];
        let right_ok = k + 1 == GRID_POINTS || values[k] <= values[k + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let a = grid[k.saturating_sub(1)];
        let b = grid[(k + 1).min(GRID_POINTS - 1)];
        let delta = golden_section(&h, a, b);
        for d in [delta, grid[k]] {
            let v = h(d);
            if v < best.0 {
                best = (v, d);
            }
        }
    }
    arrival + best.1
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_STEPS {
        if b - a <= 1e-14 * b.abs().max(1e-300) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}
