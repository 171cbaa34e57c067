//! Exact solver for the single-facility Lagrangian subproblem.
//!
//! With multipliers `u`, facility `i` and tangent piece `k`, the best
//! capacity for a fixed customer set is available in closed form, which turns
//! the subproblem into
//!
//! ```text
//! z_k = p_k + min_{y in {0,1}^J} sum_j (q_jk - u_j) y_j + sqrt(sum_j r_jk y_j)
//! ```
//!
//! Customers with `q - u >= 0` are never worth taking. The rest, sorted by
//! `(q - u) / r`, have a prefix-optimal structure, so a single prefix scan
//! after sorting finds the optimum.

use std::cell::Cell;

use crate::costfn::{Linearization, Piece};
use crate::instance::Instance;

/// `p`, `q_j` and `r_j` for one (facility, piece) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PieceConstants {
    pub p: f64,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
}

pub fn piece_constants(inst: &Instance, lin: &Linearization, i: usize, k: usize) -> PieceConstants {
    let fac = &inst.facilities()[i];
    let piece = lin.pieces()[k];
    let marginal = fac.operating_cost * piece.slope;
    let row = inst.access_row(i);
    let mut q = Vec::with_capacity(inst.n_customers());
    let mut r = Vec::with_capacity(inst.n_customers());
    for (j, cust) in inst.customers().iter().enumerate() {
        let lambda = cust.demand_rate;
        q.push(fac.serving_cost * lambda + row[j] * lambda + marginal * lambda);
        r.push(4.0 * fac.waiting_cost * marginal * lambda);
    }
    PieceConstants {
        p: piece_fixed_cost(fac.fixed_cost, fac.operating_cost, &piece),
        q,
        r,
    }
}

/// `f + c * (g(mu_k) - g'(mu_k) mu_k)`: the fixed part of piece `k`.
#[inline]
fn piece_fixed_cost(fixed: f64, operating: f64, piece: &Piece) -> f64 {
    fixed + operating * piece.intercept
}

/// Closed-form optimal capacity `Lambda + sqrt(w Lambda / (c g'))` for a
/// facility with arrival rate `Lambda`, waiting cost `w` and marginal
/// capacity cost `c g'`.
#[inline]
pub fn optimal_capacity(arrival_rate: f64, waiting_cost: f64, marginal_cost: f64) -> f64 {
    arrival_rate + (waiting_cost * arrival_rate / marginal_cost).sqrt()
}

/// Optimum of the binary inner problem (without the constant `p`).
#[derive(Clone, Debug, PartialEq)]
pub struct InnerSolution {
    pub value: f64,
    /// Selected customers in ascending id order.
    pub selection: Vec<usize>,
}

/// Minimizes `sum_j (q_j - u_j) y_j + sqrt(sum_j r_j y_j)` over binary `y`.
///
/// Requires `r_j >= 0`. Ties in the sort key are broken by customer id and
/// ties between prefixes by the shorter prefix.
pub fn solve_inner(pc: &PieceConstants, u: &[f64]) -> InnerSolution {
    let counter = Cell::new(0);
    solve_inner_counting(pc, u, &counter)
}

/// Like [`solve_inner`], also returning the number of key comparisons made
/// while sorting.
pub fn solve_inner_with_stats(pc: &PieceConstants, u: &[f64]) -> (InnerSolution, usize) {
    let counter = Cell::new(0);
    let sol = solve_inner_counting(pc, u, &counter);
    (sol, counter.get())
}

fn solve_inner_counting(pc: &PieceConstants, u: &[f64], comparisons: &Cell<usize>) -> InnerSolution {
    debug_assert_eq!(pc.q.len(), u.len());
    let mut forced = Vec::new();
    let mut forced_d = 0.0;
    let mut forced_r = 0.0;
    let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
    for (j, (&q, &r)) in pc.q.iter().zip(&pc.r).enumerate() {
        let d = q - u[j];
        if d >= 0.0 {
            continue;
        }
        if r == 0.0 {
            forced.push(j);
            forced_d += d;
            forced_r += r;
        } else {
            candidates.push((j, d, r));
        }
    }
    candidates.sort_by(|a, b| {
        comparisons.set(comparisons.get() + 1);
        (a.1 / a.2)
            .total_cmp(&(b.1 / b.2))
            .then_with(|| a.0.cmp(&b.0))
    });

    let mut best_len = 0;
    let mut best = forced_d + forced_r.sqrt();
    let (mut sum_d, mut sum_r) = (forced_d, forced_r);
    for (m, &(_, d, r)) in candidates.iter().enumerate() {
        sum_d += d;
        sum_r += r;
        let value = sum_d + sum_r.sqrt();
        if value < best {
            best = value;
            best_len = m + 1;
        }
    }

    let mut selection = forced;
    selection.extend(candidates[..best_len].iter().map(|c| c.0));
    selection.sort_unstable();
    InnerSolution {
        value: best,
        selection,
    }
}

/// Optimal response of one facility to the multipliers.
#[derive(Clone, Debug, PartialEq)]
pub struct SubproblemResult {
    pub facility: usize,
    /// Index of the minimizing tangent piece `k(i)`.
    pub piece: usize,
    /// `z` at the minimizing piece; the facility opens iff this is negative.
    pub objective: f64,
    /// Selected customers (empty when closed), ascending.
    pub selected: Vec<usize>,
    /// Optimal capacity, 0 when closed.
    pub capacity: f64,
    pub open: bool,
}

impl SubproblemResult {
    /// Contribution `min(0, z)` to the Lagrangian bound.
    pub fn contribution(&self) -> f64 {
        if self.open {
            self.objective
        } else {
            0.0
        }
    }
}

/// Solves facility `i` at multipliers `u` over all pieces.
///
/// The sort key `(q_jk - u_j) / r_jk` equals `(key_j + c g'_k) / (4 w c g'_k)`
/// with `key_j = s + a_j - u_j / lambda_j`, a positive affine map of `key_j`,
/// so one sort per facility serves every piece. For piece `k` the candidates
/// are the prefix with `key_j < -c g'_k`, and prefix sums give each `Q_m` in
/// constant time.
pub fn solve_facility(inst: &Instance, lin: &Linearization, i: usize, u: &[f64]) -> SubproblemResult {
    let fac = &inst.facilities()[i];
    let row = inst.access_row(i);
    let c = fac.operating_cost;
    let w = fac.waiting_cost;
    let pieces = lin.pieces();

    let min_marginal = pieces
        .iter()
        .map(|p| c * p.slope)
        .fold(f64::INFINITY, f64::min);

    // (key, customer, (s + a) lambda - u, lambda)
    let mut sorted: Vec<(f64, usize, f64, f64)> = inst
        .customers()
        .iter()
        .enumerate()
        .filter_map(|(j, cust)| {
            let lambda = cust.demand_rate;
            let base = (fac.serving_cost + row[j]) * lambda - u[j];
            let key = base / lambda;
            (key < -min_marginal).then_some((key, j, base, lambda))
        })
        .collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

    let mut cum_base = Vec::with_capacity(sorted.len() + 1);
    let mut cum_lambda = Vec::with_capacity(sorted.len() + 1);
    cum_base.push(0.0);
    cum_lambda.push(0.0);
    for &(_, _, base, lambda) in &sorted {
        cum_base.push(cum_base.last().unwrap() + base);
        cum_lambda.push(cum_lambda.last().unwrap() + lambda);
    }

    let mut best_piece = 0;
    let mut best_z = f64::INFINITY;
    let mut best_len = 0;
    for (k, piece) in pieces.iter().enumerate() {
        let marginal = c * piece.slope;
        let eligible = sorted.partition_point(|e| e.0 < -marginal);
        let mut len = 0;
        let mut inner = 0.0;
        for m in 1..=eligible {
            let value = cum_base[m] + marginal * cum_lambda[m]
                + (4.0 * w * marginal * cum_lambda[m]).sqrt();
            if value < inner {
                inner = value;
                len = m;
            }
        }
        let z = piece_fixed_cost(fac.fixed_cost, c, piece) + inner;
        if z < best_z {
            best_z = z;
            best_piece = k;
            best_len = len;
        }
    }

    finish(inst, lin, i, best_piece, best_z, sorted[..best_len].iter().map(|e| e.1).collect())
}

/// Same result as [`solve_facility`], computed piece by piece through
/// [`piece_constants`] and [`solve_inner`].
pub fn solve_facility_per_piece(
    inst: &Instance,
    lin: &Linearization,
    i: usize,
    u: &[f64],
) -> SubproblemResult {
    let mut best: Option<(usize, f64, Vec<usize>)> = None;
    for k in 0..lin.len() {
        let pc = piece_constants(inst, lin, i, k);
        let inner = solve_inner(&pc, u);
        let z = pc.p + inner.value;
        if best.as_ref().is_none_or(|b| z < b.1) {
            best = Some((k, z, inner.selection));
        }
    }
    let (k, z, selection) = best.expect("linearization has at least one piece");
    finish(inst, lin, i, k, z, selection)
}

fn finish(
    inst: &Instance,
    lin: &Linearization,
    i: usize,
    piece: usize,
    objective: f64,
    mut selected: Vec<usize>,
) -> SubproblemResult {
    let open = objective < 0.0;
    let capacity = if open {
        let fac = &inst.facilities()[i];
        let arrival: f64 = selected
            .iter()
            .map(|&j| inst.customers()[j].demand_rate)
            .sum();
        optimal_capacity(
            arrival,
            fac.waiting_cost,
            fac.operating_cost * lin.pieces()[piece].slope,
        )
    } else {
        selected.clear();
        0.0
    };
    selected.sort_unstable();
    SubproblemResult {
        facility: i,
        piece,
        objective,
        selected,
        capacity,
        open,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costfn::{linearize, CostFunction};
    use crate::instance::{generate_instance, Customer, Facility};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive minimum over all 2^n selections; ties keep the first mask.
    fn brute_inner(pc: &PieceConstants, u: &[f64]) -> (f64, Vec<usize>) {
        let n = pc.q.len();
        let mut best = (f64::INFINITY, vec![]);
        for mask in 0u32..(1 << n) {
            let (mut d, mut r) = (0.0, 0.0);
            for j in 0..n {
                if mask >> j & 1 == 1 {
                    d += pc.q[j] - u[j];
                    r += pc.r[j];
                }
            }
            let v = d + f64::sqrt(r);
            if v < best.0 {
                best = (v, (0..n).filter(|j| mask >> j & 1 == 1).collect());
            }
        }
        best
    }

    #[test]
    fn constants_by_substitution() {
        let inst = Instance::new(
            vec![Facility {
                id: 0,
                fixed_cost: 10.0,
                operating_cost: 1.0,
                serving_cost: 2.0,
                waiting_cost: 4.0,
            }],
            vec![
                Customer { id: 0, demand_rate: 1.0 },
                Customer { id: 1, demand_rate: 2.0 },
            ],
            vec![3.0, 3.0],
            CostFunction::SquareRoot,
        )
        .unwrap();
        // sqrt tangent at 4: g = 2, g' = 0.25. Find the piece touching mu = 4.
        let lin = linearize(&CostFunction::SquareRoot, 1.0, 4.0 / 13.928_203_230_275_509, 100.0).unwrap();
        let piece = lin.pieces()[0];
        assert!((piece.tangent - 4.0).abs() < 1e-9, "{}", piece.tangent);
        let pc = piece_constants(&inst, &lin, 0, 0);
        assert!((pc.p - 11.0).abs() < 1e-9);
        // q_1 = 2*2 + 3*2 + 0.25*2 = 10.5, r_0 = 4*4*1*0.25*1 = 4
        assert!((pc.q[1] - 10.5).abs() < 1e-9);
        assert!((pc.r[0] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn linear_family_constants() {
        let inst = Instance::new(
            vec![Facility {
                id: 0,
                fixed_cost: 10.0,
                operating_cost: 0.5,
                serving_cost: 2.0,
                waiting_cost: 4.0,
            }],
            vec![Customer { id: 0, demand_rate: 2.0 }],
            vec![3.0],
            CostFunction::Linear,
        )
        .unwrap();
        let lin = linearize(&CostFunction::Linear, 0.01, 1.0, 10.0).unwrap();
        let pc = piece_constants(&inst, &lin, 0, 0);
        assert_eq!(pc.p, 10.0);
        assert_eq!(pc.q[0], 11.0);
        let w4 = inst.with_family(CostFunction::Linear, 1.0).unwrap();
        let w4 = Instance::new(
            w4.facilities().to_vec(),
            vec![Customer { id: 0, demand_rate: 1.0 }],
            vec![3.0],
            CostFunction::Linear,
        )
        .unwrap();
        assert_eq!(piece_constants(&w4, &lin, 0, 0).r[0], 16.0);
    }

    #[test]
    fn all_nonnegative_reduced_costs() {
        let pc = PieceConstants {
            p: 0.0,
            q: vec![1.0, 2.0, 3.0],
            r: vec![1.0, 1.0, 1.0],
        };
        let sol = solve_inner(&pc, &[0.0, 2.0, -1.0]);
        assert_eq!(sol.value, 0.0);
        assert!(sol.selection.is_empty());
    }

    #[test]
    fn single_attractive_customer() {
        let pc = PieceConstants {
            p: 0.0,
            q: vec![0.0],
            r: vec![16.0],
        };
        let sol = solve_inner(&pc, &[10.0]);
        assert_eq!(sol.value, -6.0);
        assert_eq!(sol.selection, vec![0]);
    }

    #[test]
    fn ties_prefer_the_shorter_prefix() {
        // -4 + sqrt(16) = 0 ties with the empty set
        let pc = PieceConstants {
            p: 0.0,
            q: vec![0.0],
            r: vec![16.0],
        };
        let sol = solve_inner(&pc, &[4.0]);
        assert_eq!(sol.value, 0.0);
        assert!(sol.selection.is_empty());
    }

    #[test]
    fn zero_weight_customers_are_forced_in() {
        let pc = PieceConstants {
            p: 0.0,
            q: vec![1.0, 1.0, 5.0],
            r: vec![0.0, 9.0, 0.0],
        };
        // customer 0: d = -2, r = 0 -> forced; customer 1: d = -4, r = 9;
        // customer 2: d = 1 -> excluded
        let sol = solve_inner(&pc, &[3.0, 5.0, 4.0]);
        assert_eq!(sol.selection, vec![0, 1]);
        assert!((sol.value - (-6.0 + 3.0)).abs() < 1e-12);
    }

    #[test]
    fn matches_enumeration_on_twelve_customers() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let q: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..50.0)).collect();
            let r: Vec<f64> = (0..12).map(|_| rng.random_range(0.1..400.0)).collect();
            let u: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..80.0)).collect();
            let pc = PieceConstants { p: 0.0, q, r };
            let got = solve_inner(&pc, &u);
            let (value, selection) = brute_inner(&pc, &u);
            assert!((got.value - value).abs() <= 1e-9 * value.abs().max(1.0));
            assert_eq!(got.selection, selection);
        }
    }

    #[test]
    fn capacity_substitution() {
        assert_eq!(optimal_capacity(1.0, 4.0, 1.0), 3.0);
    }

    #[test]
    fn closed_when_nothing_is_attractive() {
        let inst = generate_instance(3, 8, 5, CostFunction::SquareRoot);
        let lin = linearize(inst.cost_function(), 0.01, 1.0, 500.0).unwrap();
        let res = solve_facility(&inst, &lin, 1, &[0.0; 8]);
        assert!(!res.open);
        assert_eq!(res.contribution(), 0.0);
        assert!(res.selected.is_empty());
        assert_eq!(res.capacity, 0.0);
    }

    #[test]
    fn fast_and_per_piece_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for (seed, g) in [
            (1, CostFunction::Linear),
            (2, CostFunction::SquareRoot),
            (3, CostFunction::Fractional),
        ] {
            let inst = generate_instance(4, 40, seed, g);
            let lin = linearize(inst.cost_function(), 0.01, 1.0, 5000.0).unwrap();
            for _ in 0..20 {
                let u: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..800.0)).collect();
                for i in 0..4 {
                    let a = solve_facility(&inst, &lin, i, &u);
                    let b = solve_facility_per_piece(&inst, &lin, i, &u);
                    assert_eq!(a.open, b.open);
                    assert_eq!(a.selected, b.selected);
                    assert!((a.objective - b.objective).abs() <= 1e-9 * a.objective.abs().max(1.0));
                }
            }
        }
    }
}
