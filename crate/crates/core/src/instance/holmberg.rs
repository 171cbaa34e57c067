//! Converter for capacitated facility location benchmark files in the
//! whitespace-separated Holmberg layout:
//!
//! ```text
//! n m
//! capacity_1 fixed_cost_1
//! ...                        (n lines)
//! demand_1 ... demand_m
//! cost_11 ... cost_1m        (n rows, facility-major)
//! ...
//! ```
//!
//! Allocation costs in these files price a customer's whole demand, so they
//! are divided by the demand to get a per-unit access cost. Capacities are
//! ignored (capacity is a decision here). Serving and waiting costs are not
//! part of the format and are drawn from the generator's ranges.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Customer, Facility, GeneratorConfig, Instance};
use crate::costfn::CostFunction;
use crate::error::{Error, Result};

pub fn parse(text: &str, family: CostFunction, seed: u64, cfg: &GeneratorConfig) -> Result<Instance> {
    let mut tokens = Tokens::new(text);
    let n = tokens.count("n_facilities")?;
    let m = tokens.count("n_customers")?;
    if n == 0 || m == 0 {
        return Err(Error::invalid("header", "facility and customer counts must be positive"));
    }
    let mut fixed = Vec::with_capacity(n);
    for i in 0..n {
        let _capacity = tokens.real(&format!("facility {i} capacity"))?;
        fixed.push(tokens.real(&format!("facility {i} fixed_cost"))?);
    }
    let mut demand = Vec::with_capacity(m);
    for j in 0..m {
        demand.push(tokens.real(&format!("customer {j} demand"))?);
    }
    let mut access = Vec::with_capacity(n * m);
    for i in 0..n {
        for (j, &d) in demand.iter().enumerate() {
            let total = tokens.real(&format!("allocation cost [{i}][{j}]"))?;
            access.push(if d > 0.0 { total / d } else { total });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let operating_cost = cfg
        .operating_cost
        .or_else(|| family.default_operating_cost())
        .unwrap_or(1.0);
    let facilities = fixed
        .into_iter()
        .enumerate()
        .map(|(id, fixed_cost)| Facility {
            id,
            fixed_cost,
            operating_cost,
            serving_cost: uniform(&mut rng, cfg.serving_cost),
            waiting_cost: uniform(&mut rng, cfg.waiting_cost),
        })
        .collect();
    let customers = demand
        .into_iter()
        .enumerate()
        .map(|(id, demand_rate)| Customer { id, demand_rate })
        .collect();
    Instance::new(facilities, customers, access, family)
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    use rand::Rng;
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

struct Tokens<'a> {
    iter: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let iter = text
            .lines()
            .enumerate()
            .flat_map(|(n, line)| line.split_whitespace().map(move |t| (n + 1, t)));
        Tokens {
            iter: Box::new(iter),
        }
    }

    fn real(&mut self, what: &str) -> Result<f64> {
        let (line, tok) = self.iter.next().ok_or_else(|| Error::Parse {
            line: 0,
            column: 0,
            message: format!("unexpected end of file reading {what}"),
        })?;
        tok.parse::<f64>().map_err(|_| Error::Parse {
            line,
            column: 0,
            message: format!("{what}: `{tok}` is not a number"),
        })
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        let v = self.real(what)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::invalid(what, format!("{v} is not a count")));
        }
        Ok(v as usize)
    }
}
