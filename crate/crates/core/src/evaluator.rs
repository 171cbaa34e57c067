//! Objective evaluation under M/M/1 congestion.

use serde::Serialize;

use crate::costfn::Linearization;
use crate::error::{Error, Result};
use crate::instance::{Instance, Solution};

/// Which opening-cost curve to charge.
#[derive(Clone, Copy, Debug)]
pub enum Opening<'a> {
    /// The true concave `g`.
    Exact,
    /// The tangent envelope `g_hat`.
    Linearized(&'a Linearization),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub opening: f64,
    pub serving: f64,
    pub access: f64,
    pub waiting: f64,
    pub total: f64,
}

impl CostBreakdown {
    /// Percent shares of (opening, serving, access, waiting) in the total.
    pub fn shares(&self) -> [f64; 4] {
        if self.total == 0.0 {
            return [0.0; 4];
        }
        let pct = |x: f64| 100.0 * x / self.total;
        [
            pct(self.opening),
            pct(self.serving),
            pct(self.access),
            pct(self.waiting),
        ]
    }
}

/// Expected time in an M/M/1 system, `1 / (mu - lambda)`.
pub fn mm1_wait(capacity: f64, arrival_rate: f64) -> Result<f64> {
    if !(arrival_rate >= 0.0) {
        return Err(Error::Domain(format!("arrival rate {arrival_rate} is negative")));
    }
    if !(capacity > arrival_rate) {
        return Err(Error::SteadyState {
            facility: 0,
            capacity,
            arrival_rate,
        });
    }
    Ok(1.0 / (capacity - arrival_rate))
}

/// Total cost of a feasible design, split into its four components.
pub fn evaluate(inst: &Instance, sol: &Solution, opening: Opening<'_>) -> Result<CostBreakdown> {
    sol.check_feasible(inst)?;
    let g = inst.cost_function();
    let rates = sol.arrival_rates(inst);
    let mut out = CostBreakdown::default();

    for (j, slot) in sol.assign.iter().enumerate() {
        let i = slot.expect("checked feasible");
        let lambda = inst.customers()[j].demand_rate;
        out.serving += inst.facilities()[i].serving_cost * lambda;
        out.access += inst.access(i, j) * lambda;
    }
    for (i, fac) in inst.facilities().iter().enumerate() {
        if !sol.open[i] {
            continue;
        }
        let mu = sol.capacity[i];
        let curve = match opening {
            Opening::Exact => g.eval(mu)?,
            Opening::Linearized(lin) => lin.eval(mu),
        };
        out.opening += fac.fixed_cost + fac.operating_cost * curve;
        let wait = mm1_wait(mu, rates[i]).map_err(|_| Error::SteadyState {
            facility: i,
            capacity: mu,
            arrival_rate: rates[i],
        })?;
        out.waiting += fac.waiting_cost * rates[i] * wait;
    }
    out.total = out.opening + out.serving + out.access + out.waiting;
    Ok(out)
}
