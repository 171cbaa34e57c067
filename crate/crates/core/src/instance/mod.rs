//! Problem data: facilities, customers, access costs and feasible designs.

mod file;
mod generate;
pub mod holmberg;

use crate::costfn::CostFunction;
use crate::error::{Error, Result};

pub use file::{read_instance, write_instance};
pub use generate::{
    generate_instance, generate_suite, generate_with, GeneratorConfig, SuiteEntry, STANDARD_SUITE,
};

/// A candidate service location.
#[derive(Clone, Debug, PartialEq)]
pub struct Facility {
    pub id: usize,
    /// Fixed opening cost per time unit.
    pub fixed_cost: f64,
    /// Scales the concave opening-cost term `g(mu)`.
    pub operating_cost: f64,
    /// Serving cost per unit of demand.
    pub serving_cost: f64,
    /// Waiting cost per customer per time unit.
    pub waiting_cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Customer {
    pub id: usize,
    pub demand_rate: f64,
}

/// Immutable problem instance. Construction validates every invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    facilities: Vec<Facility>,
    customers: Vec<Customer>,
    /// Row-major, one row of `customers.len()` entries per facility.
    access_cost: Vec<f64>,
    cost: CostFunction,
}

impl Instance {
    pub fn new(
        facilities: Vec<Facility>,
        customers: Vec<Customer>,
        access_cost: Vec<f64>,
        cost: CostFunction,
    ) -> Result<Self> {
        if facilities.is_empty() {
            return Err(Error::invalid("facilities", "at least one facility is required"));
        }
        if customers.is_empty() {
            return Err(Error::invalid("customers", "at least one customer is required"));
        }
        for (i, f) in facilities.iter().enumerate() {
            let field = |name: &str| format!("facility {i} {name}");
            if f.id != i {
                return Err(Error::invalid(field("id"), format!("expected {i}, found {}", f.id)));
            }
            non_negative(&field("fixed_cost"), f.fixed_cost)?;
            // the capacity formula divides by c * g'
            if !(f.operating_cost > 0.0 && f.operating_cost.is_finite()) {
                return Err(Error::invalid(field("operating_cost"), "operating_cost must be positive"));
            }
            non_negative(&field("serving_cost"), f.serving_cost)?;
            if !(f.waiting_cost > 0.0 && f.waiting_cost.is_finite()) {
                return Err(Error::invalid(field("waiting_cost"), "waiting_cost must be positive"));
            }
        }
        for (j, c) in customers.iter().enumerate() {
            if c.id != j {
                return Err(Error::invalid(
                    format!("customer {j} id"),
                    format!("expected {j}, found {}", c.id),
                ));
            }
            if !(c.demand_rate > 0.0 && c.demand_rate.is_finite()) {
                return Err(Error::invalid(
                    format!("customer {j} demand_rate"),
                    "demand_rate must be positive",
                ));
            }
        }
        let expected = facilities.len() * customers.len();
        if access_cost.len() != expected {
            return Err(Error::invalid(
                "access_cost",
                format!("expected {expected} entries, found {}", access_cost.len()),
            ));
        }
        let m = customers.len();
        for (idx, &a) in access_cost.iter().enumerate() {
            non_negative(&format!("access_cost[{}][{}]", idx / m, idx % m), a)?;
        }
        Ok(Instance {
            facilities,
            customers,
            access_cost,
            cost,
        })
    }

    pub fn facilities(&self) -> &[Facility] {
        &self.facilities
    }

    pub fn customers(&self) -> &[Customer] {
        &self.customers
    }

    pub fn n_facilities(&self) -> usize {
        self.facilities.len()
    }

    pub fn n_customers(&self) -> usize {
        self.customers.len()
    }

    pub fn cost_function(&self) -> &CostFunction {
        &self.cost
    }

    #[inline]
    pub fn access(&self, facility: usize, customer: usize) -> f64 {
        self.access_cost[facility * self.customers.len() + customer]
    }

    /// Access costs of one facility, indexed by customer.
    pub fn access_row(&self, facility: usize) -> &[f64] {
        let m = self.customers.len();
        &self.access_cost[facility * m..(facility + 1) * m]
    }

    pub fn total_demand(&self) -> f64 {
        self.customers.iter().map(|c| c.demand_rate).sum()
    }

    /// Same facilities, customers and access costs under another cost family.
    /// Every operating cost is replaced by `operating_cost`.
    pub fn with_family(&self, cost: CostFunction, operating_cost: f64) -> Result<Self> {
        let facilities = self
            .facilities
            .iter()
            .map(|f| Facility {
                operating_cost,
                ..f.clone()
            })
            .collect();
        Instance::new(facilities, self.customers.clone(), self.access_cost.clone(), cost)
    }
}

fn non_negative(field: &str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{value} must be a finite non-negative number")))
    }
}

/// A location-allocation-capacity design.
///
/// Feasible designs assign every customer to an open facility, give closed
/// facilities zero capacity, and keep each open capacity strictly above its
/// arrival rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub open: Vec<bool>,
    pub assign: Vec<Option<usize>>,
    pub capacity: Vec<f64>,
}

impl Solution {
    /// Arrival rate `Lambda_i` at every facility.
    pub fn arrival_rates(&self, inst: &Instance) -> Vec<f64> {
        let mut rates = vec![0.0; inst.n_facilities()];
        for (j, slot) in self.assign.iter().enumerate() {
            if let Some(i) = *slot {
                rates[i] += inst.customers()[j].demand_rate;
            }
        }
        rates
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }

    /// Mean capacity over open facilities (0 when none are open).
    pub fn average_capacity(&self) -> f64 {
        let open: Vec<f64> = self
            .open
            .iter()
            .zip(&self.capacity)
            .filter(|(o, _)| **o)
            .map(|(_, &mu)| mu)
            .collect();
        if open.is_empty() {
            0.0
        } else {
            open.iter().sum::<f64>() / open.len() as f64
        }
    }

    /// Checks every structural constraint; the first violation is reported.
    pub fn check_feasible(&self, inst: &Instance) -> Result<()> {
        let n = inst.n_facilities();
        if self.open.len() != n || self.capacity.len() != n || self.assign.len() != inst.n_customers()
        {
            return Err(Error::Infeasible("dimension mismatch with instance".into()));
        }
        for (j, slot) in self.assign.iter().enumerate() {
            match *slot {
                None => return Err(Error::Infeasible(format!("customer {j} is unassigned"))),
                Some(i) if i >= n => {
                    return Err(Error::Infeasible(format!(
                        "customer {j} assigned to unknown facility {i}"
                    )))
                }
                Some(i) if !self.open[i] => {
                    return Err(Error::Infeasible(format!(
                        "customer {j} assigned to closed facility {i}"
                    )))
                }
                Some(_) => {}
            }
        }
        let rates = self.arrival_rates(inst);
        for i in 0..n {
            let mu = self.capacity[i];
            if !self.open[i] {
                if mu != 0.0 {
                    return Err(Error::Infeasible(format!(
                        "closed facility {i} has capacity {mu}"
                    )));
                }
            } else if !(mu > rates[i]) || !mu.is_finite() {
                return Err(Error::SteadyState {
                    facility: i,
                    capacity: mu,
                    arrival_rate: rates[i],
                });
            }
        }
        Ok(())
    }
}
