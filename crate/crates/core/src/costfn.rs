//! Concave opening-cost families and their tangent-line linearization.
//!
//! A facility opened with service capacity `mu` pays `f + c * g(mu)` where `g`
//! is concave and non-decreasing. The solver never works with `g` directly;
//! it replaces it with the lower envelope of a finite set of tangent lines
//!
//! ```text
//! g_hat(mu) = min_k { g(mu_k) + g'(mu_k) * (mu - mu_k) }
//! ```
//!
//! whose tangent points `mu_k` and breakpoints `b_k` are placed so that
//! `0 <= (g_hat - g) / g <= epsilon` on a chosen capacity range.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::instance::Instance;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied concave cost `g` with its derivative.
#[derive(Clone)]
pub struct CustomCost {
    name: String,
    value: ScalarFn,
    derivative: ScalarFn,
}

impl fmt::Debug for CustomCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomCost").field("name", &self.name).finish()
    }
}

/// The opening-cost shape `g` shared by every facility of an instance.
#[derive(Clone, Debug)]
pub enum CostFunction {
    /// `g(mu) = mu`
    Linear,
    /// `g(mu) = sqrt(mu)`
    SquareRoot,
    /// `g(mu) = mu / (mu + 1)`
    Fractional,
    Custom(CustomCost),
}

impl PartialEq for CostFunction {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (CostFunction::Linear, CostFunction::Linear)
            | (CostFunction::SquareRoot, CostFunction::SquareRoot)
            | (CostFunction::Fractional, CostFunction::Fractional) => true,
            (CostFunction::Custom(a), CostFunction::Custom(b)) => {
                a.name == b.name
                    && Arc::ptr_eq(&a.value, &b.value)
                    && Arc::ptr_eq(&a.derivative, &b.derivative)
            }
            _ => false,
        }
    }
}

impl CostFunction {
    /// Builds a custom family after probing it on a geometric grid over
    /// `[1e-3, 1e9]`: values must be finite and non-negative, the derivative
    /// strictly positive and non-increasing.
    pub fn custom<V, D>(name: impl Into<String>, value: V, derivative: D) -> Result<Self>
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let name = name.into();
        let mut prev_slope = f64::INFINITY;
        for step in 0..=240 {
            let mu = 1e-3 * 10f64.powf(step as f64 / 20.0);
            let g = value(mu);
            let slope = derivative(mu);
            if !g.is_finite() || g < 0.0 {
                return Err(Error::invalid(
                    "cost_function",
                    format!("{name}: g({mu}) = {g} is not a finite non-negative value"),
                ));
            }
            if !(slope.is_finite() && slope > 0.0) {
                return Err(Error::invalid(
                    "cost_function",
                    format!("{name}: g'({mu}) = {slope} must be strictly positive"),
                ));
            }
            if slope > prev_slope * (1.0 + 1e-12) {
                return Err(Error::invalid(
                    "cost_function",
                    format!("{name}: g' increases near {mu}; g must be concave"),
                ));
            }
            prev_slope = slope;
        }
        Ok(CostFunction::Custom(CustomCost {
            name,
            value: Arc::new(value),
            derivative: Arc::new(derivative),
        }))
    }

    pub fn name(&self) -> &str {
        match self {
            CostFunction::Linear => "linear",
            CostFunction::SquareRoot => "square_root",
            CostFunction::Fractional => "fractional",
            CostFunction::Custom(c) => &c.name,
        }
    }

    /// Operating cost `c_i` used by the generator for each built-in family.
    pub fn default_operating_cost(&self) -> Option<f64> {
        match self {
            CostFunction::Linear => Some(1.0),
            CostFunction::SquareRoot => Some(10.0),
            CostFunction::Fractional => Some(100.0),
            CostFunction::Custom(_) => None,
        }
    }

    /// `g(mu)`; rejects negative or non-finite capacities.
    pub fn eval(&self, mu: f64) -> Result<f64> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!(
                "{}: g is undefined at capacity {mu}",
                self.name()
            )));
        }
        Ok(self.value(mu))
    }

    /// `g'(mu)`; the square-root derivative is unbounded at zero.
    pub fn deriv(&self, mu: f64) -> Result<f64> {
        let undefined = match self {
            CostFunction::SquareRoot => !(mu > 0.0),
            _ => !(mu >= 0.0),
        };
        if undefined || !mu.is_finite() {
            return Err(Error::Domain(format!(
                "{}: g' is undefined at capacity {mu}",
                self.name()
            )));
        }
        let slope = self.slope(mu);
        if !(slope > 0.0) {
            return Err(Error::Domain(format!(
                "{}: g'({mu}) = {slope} is not strictly positive",
                self.name()
            )));
        }
        Ok(slope)
    }

    #[inline]
    pub(crate) fn value(&self, mu: f64) -> f64 {
        match self {
            CostFunction::Linear => mu,
            CostFunction::SquareRoot => mu.sqrt(),
            CostFunction::Fractional => mu / (mu + 1.0),
            CostFunction::Custom(c) => (c.value)(mu),
        }
    }

    #[inline]
    pub(crate) fn slope(&self, mu: f64) -> f64 {
        match self {
            CostFunction::Linear => 1.0,
            CostFunction::SquareRoot => 0.5 / mu.sqrt(),
            CostFunction::Fractional => {
                let d = mu + 1.0;
                1.0 / (d * d)
            }
            CostFunction::Custom(c) => (c.derivative)(mu),
        }
    }
}

impl fmt::Display for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(CostFunction::Linear),
            "sqrt" | "square_root" | "square-root" => Ok(CostFunction::SquareRoot),
            "fractional" => Ok(CostFunction::Fractional),
            other => Err(Error::invalid(
                "cost_family",
                format!("unknown cost family `{other}` (expected linear, sqrt or fractional)"),
            )),
        }
    }
}

/// One tangent line `slope * mu + intercept`, touching `g` at `tangent`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub tangent: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl Piece {
    fn at(g: &CostFunction, mu: f64) -> Self {
        let slope = g.slope(mu);
        Piece {
            tangent: mu,
            slope,
            intercept: g.value(mu) - slope * mu,
        }
    }

    #[inline]
    pub fn eval(&self, mu: f64) -> f64 {
        self.slope * mu + self.intercept
    }
}

/// How the tangent and breakpoint equations are solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Method {
    /// Closed forms for square-root and fractional, bisection otherwise.
    #[default]
    Auto,
    /// Bisection for every family.
    Numeric,
}

/// Tangent-line over-approximation of a concave `g`.
///
/// `breakpoints()[k]` and `breakpoints()[k + 1]` bound the interval on which
/// piece `k` is within the relative error bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Linearization {
    pieces: Vec<Piece>,
    breakpoints: Vec<f64>,
    lower: f64,
    upper: f64,
    epsilon: f64,
    closed_form_fallbacks: usize,
}

const MAX_PIECES: usize = 100_000;
const BISECTION_STEPS: usize = 400;
const BRACKET_LIMIT: f64 = 1e15;

impl Linearization {
    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of steps where a closed form failed its residual check and the
    /// numeric solver was used instead.
    pub fn closed_form_fallbacks(&self) -> usize {
        self.closed_form_fallbacks
    }

    /// `g_hat(mu)`, the minimum over all tangent lines.
    pub fn eval(&self, mu: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.eval(mu))
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV dump with header `k,tangent,breakpoint,slope,intercept`.
    ///
    /// Row `k` carries the right breakpoint `b_k` of piece `k` (1-based); row
    /// 0 holds the range start `b_0` only.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,tangent,breakpoint,slope,intercept\n");
        out.push_str(&format!("0,,{:e},,\n", self.breakpoints[0]));
        for (k, piece) in self.pieces.iter().enumerate() {
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{:e}\n",
                k + 1,
                piece.tangent,
                self.breakpoints[k + 1],
                piece.slope,
                piece.intercept
            ));
        }
        out
    }
}

/// Linearizes `g` on `[lower, upper]` with relative error `epsilon`.
pub fn linearize(g: &CostFunction, epsilon: f64, lower: f64, upper: f64) -> Result<Linearization> {
    linearize_with(g, epsilon, lower, upper, Method::Auto)
}

pub fn linearize_with(
    g: &CostFunction,
    epsilon: f64,
    lower: f64,
    upper: f64,
    method: Method,
) -> Result<Linearization> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid("epsilon", format!("{epsilon} must be positive")));
    }
    if !(lower > 0.0 && upper > lower) || !upper.is_finite() {
        return Err(Error::invalid(
            "range",
            format!("need 0 < lower < upper, got [{lower}, {upper}]"),
        ));
    }

    if matches!(g, CostFunction::Linear) {
        // The tangent of a line is the line itself.
        return Ok(Linearization {
            pieces: vec![Piece::at(g, 0.5 * (lower + upper))],
            breakpoints: vec![lower, f64::INFINITY],
            lower,
            upper,
            epsilon,
            closed_form_fallbacks: 0,
        });
    }

    let closed = method == Method::Auto;
    let mut pieces = Vec::new();
    let mut breakpoints = vec![lower];
    let mut fallbacks = 0;
    let mut left = lower;

    loop {
        if pieces.len() >= MAX_PIECES {
            return Err(Error::NoConvergence(format!(
                "more than {MAX_PIECES} pieces needed for epsilon {epsilon}"
            )));
        }
        let tangent = match g {
            CostFunction::SquareRoot if closed => Some(sqrt_next_point(epsilon, left)),
            CostFunction::Fractional if closed => match fractional_tangent(epsilon, left) {
                Some(mu) if step_residual(g, epsilon, mu, left) <= 1e-9 => Some(mu),
                Some(_) => {
                    fallbacks += 1;
                    numeric_tangent(g, epsilon, left)
                }
                None => None,
            },
            _ => numeric_tangent(g, epsilon, left),
        };

        match tangent {
            Some(mu) => {
                let right = match g {
                    CostFunction::SquareRoot if closed => sqrt_next_point(epsilon, mu),
                    CostFunction::Fractional if closed => fractional_breakpoint(epsilon, mu),
                    _ => numeric_breakpoint(g, epsilon, mu)?,
                };
                pieces.push(Piece::at(g, mu));
                breakpoints.push(right);
                if right > upper {
                    break;
                }
                left = right;
            }
            None => {
                // No tangent point to the right of `left` reaches (1 + eps) g(left):
                // every tangent at mu >= left already stays within the bound at
                // `left`, so pick the one whose right breakpoint clears `upper`.
                let mu = terminal_tangent(g, epsilon, left, upper, closed)?;
                let right = breakpoint_for(g, epsilon, mu, closed)?;
                pieces.push(Piece::at(g, mu));
                breakpoints.push(right);
                break;
            }
        }
    }

    Ok(Linearization {
        pieces,
        breakpoints,
        lower,
        upper,
        epsilon,
        closed_form_fallbacks: fallbacks,
    })
}

/// Default capacity range for an instance: `[1, upper]` where `upper` applies
/// the closed-form capacity bound `L + sqrt(w_max L / (c_min g'(x)))` with
/// `L = sum of demand rates`, first at `x = L` and then once more at the result.
pub fn capacity_range(inst: &Instance) -> (f64, f64) {
    let lower = 1.0;
    let total: f64 = inst.customers().iter().map(|c| c.demand_rate).sum();
    let w_max = inst
        .facilities()
        .iter()
        .map(|f| f.waiting_cost)
        .fold(0.0, f64::max);
    let c_min = inst
        .facilities()
        .iter()
        .map(|f| f.operating_cost)
        .fold(f64::INFINITY, f64::min);
    let g = inst.cost_function();
    let bound = |x: f64| {
        let denom = c_min * g.slope(x.max(lower));
        if denom > 0.0 {
            total + (w_max * total / denom).sqrt()
        } else {
            f64::INFINITY
        }
    };
    let upper = bound(bound(total));
    let upper = if upper.is_finite() {
        upper.max(2.0 * lower)
    } else {
        // c = 0 makes capacity free; any range will do.
        (2.0 * total).max(2.0 * lower)
    };
    (lower, upper)
}

fn sqrt_next_point(epsilon: f64, x: f64) -> f64 {
    let root = (1.0 + epsilon) * x.sqrt() + ((epsilon * epsilon + 2.0 * epsilon) * x).sqrt();
    root * root
}

fn fractional_tangent(epsilon: f64, b: f64) -> Option<f64> {
    let denom = 1.0 - epsilon * b;
    if !(denom > 0.0) {
        return None;
    }
    let mu = ((1.0 + b) * (epsilon * b).sqrt() + (1.0 + epsilon) * b) / denom;
    (mu.is_finite() && mu > b).then_some(mu)
}

fn fractional_breakpoint(epsilon: f64, mu: f64) -> f64 {
    let m = 1.0 + mu;
    0.5 * (2.0 * mu
        + epsilon * m * m
        + m * (epsilon * epsilon * m * m + 4.0 * epsilon * mu).sqrt())
}

/// Relative residual of `g(mu) + g'(mu)(x - mu) = (1 + eps) g(x)`.
fn step_residual(g: &CostFunction, epsilon: f64, mu: f64, x: f64) -> f64 {
    let target = (1.0 + epsilon) * g.value(x);
    (Piece::at(g, mu).eval(x) - target).abs() / target.abs().max(f64::MIN_POSITIVE)
}

/// Step 2: the tangent point `mu > b` whose line passes through `(b, (1+eps) g(b))`.
///
/// `phi(mu) = g(mu) + g'(mu)(b - mu) - (1+eps) g(b)` is non-decreasing in `mu`
/// for concave `g` and negative at `mu = b`; `None` if it never turns positive.
fn numeric_tangent(g: &CostFunction, epsilon: f64, b: f64) -> Option<f64> {
    let target = (1.0 + epsilon) * g.value(b);
    let phi = |mu: f64| Piece::at(g, mu).eval(b) - target;
    let limit = BRACKET_LIMIT * b.max(1.0);
    let mut lo = b;
    let mut hi = 2.0 * b;
    while !(phi(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if hi > limit || !hi.is_finite() {
            return None;
        }
    }
    Some(bisect(lo, hi, |mu| phi(mu) > 0.0).1)
}

/// Step 3: the breakpoint `x > mu` where the tangent at `mu` reaches `(1+eps) g(x)`.
fn numeric_breakpoint(g: &CostFunction, epsilon: f64, mu: f64) -> Result<f64> {
    let line = Piece::at(g, mu);
    // convex in x, negative at x = mu: a single upward crossing
    let psi = |x: f64| line.eval(x) - (1.0 + epsilon) * g.value(x);
    let limit = BRACKET_LIMIT * mu.max(1.0);
    let mut lo = mu;
    let mut hi = 2.0 * mu;
    while !(psi(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if hi > limit || !hi.is_finite() {
            return Err(Error::NoConvergence(format!(
                "{}: no breakpoint to the right of tangent point {mu}",
                g.name()
            )));
        }
    }
    Ok(bisect(lo, hi, |x| psi(x) > 0.0).1)
}

fn breakpoint_for(g: &CostFunction, epsilon: f64, mu: f64, closed: bool) -> Result<f64> {
    match g {
        CostFunction::SquareRoot if closed => Ok(sqrt_next_point(epsilon, mu)),
        CostFunction::Fractional if closed => Ok(fractional_breakpoint(epsilon, mu)),
        _ => numeric_breakpoint(g, epsilon, mu),
    }
}

/// Smallest tangent point `mu >= left` (to bisection precision) whose right
/// breakpoint is at least `upper`.
fn terminal_tangent(
    g: &CostFunction,
    epsilon: f64,
    left: f64,
    upper: f64,
    closed: bool,
) -> Result<f64> {
    if breakpoint_for(g, epsilon, left, closed)? >= upper {
        return Ok(left);
    }
    // breakpoint(mu) > mu, so `upper` itself always clears the range.
    let mut lo = left;
    let mut hi = upper;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if breakpoint_for(g, epsilon, mid, closed)? >= upper {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Bisection for the switch point of a monotone predicate that is false at
/// `lo` and true at `hi`. Returns the final `(lo, hi)`.
fn bisect(mut lo: f64, mut hi: f64, above: impl Fn(f64) -> bool) -> (f64, f64) {
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
            break;
        }
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}
