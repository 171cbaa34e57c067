//! Seeded random instances.
//!
//! Serving and waiting costs follow the published protocol (`s ~ U[1, 5]`,
//! `w ~ U[50, 300]`). Fixed costs, demand rates and access costs come from
//! configurable surrogate ranges. The operating cost depends only on the cost
//! family, and the random stream does not, so two families generated from the
//! same seed differ only in `c_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Customer, Facility, Instance};
use crate::costfn::CostFunction;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub fixed_cost: (f64, f64),
    pub demand_rate: (f64, f64),
    pub access_cost: (f64, f64),
    pub serving_cost: (f64, f64),
    pub waiting_cost: (f64, f64),
    /// Overrides the family's default operating cost (1, 10 or 100).
    pub operating_cost: Option<f64>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            fixed_cost: (500.0, 3000.0),
            demand_rate: (1.0, 20.0),
            access_cost: (1.0, 30.0),
            serving_cost: (1.0, 5.0),
            waiting_cost: (50.0, 300.0),
            operating_cost: None,
        }
    }
}

/// Instance names and sizes of the 27-problem benchmark suite.
pub const STANDARD_SUITE: [(&str, usize, usize); 27] = [
    ("P1", 10, 50),
    ("P2", 10, 50),
    ("P3", 10, 50),
    ("P4", 10, 50),
    ("P13", 20, 50),
    ("P14", 20, 50),
    ("P15", 20, 50),
    ("P16", 20, 50),
    ("P25", 30, 150),
    ("P26", 30, 150),
    ("P27", 30, 150),
    ("P28", 30, 150),
    ("P41", 10, 90),
    ("P42", 20, 80),
    ("P43", 30, 70),
    ("P44", 10, 90),
    ("P45", 20, 80),
    ("P46", 30, 70),
    ("P47", 10, 90),
    ("P48", 20, 80),
    ("P49", 30, 70),
    ("P50", 10, 100),
    ("P51", 10, 100),
    ("P52", 10, 100),
    ("P53", 20, 100),
    ("P54", 10, 100),
    ("P55", 20, 100),
];

#[derive(Clone, Debug)]
pub struct SuiteEntry {
    pub name: String,
    pub seed: u64,
    pub instance: Instance,
}

/// Generates with the default surrogate distributions.
///
/// # Panics
///
/// If either count is zero.
pub fn generate_instance(
    n_facilities: usize,
    n_customers: usize,
    seed: u64,
    family: CostFunction,
) -> Instance {
    generate_with(&GeneratorConfig::default(), n_facilities, n_customers, seed, family)
}

pub fn generate_with(
    cfg: &GeneratorConfig,
    n_facilities: usize,
    n_customers: usize,
    seed: u64,
    family: CostFunction,
) -> Instance {
    assert!(n_facilities >= 1 && n_customers >= 1, "instance sizes must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let operating_cost = cfg
        .operating_cost
        .or_else(|| family.default_operating_cost())
        .unwrap_or(1.0);

    let facilities = (0..n_facilities)
        .map(|id| {
            let fixed_cost = draw(&mut rng, cfg.fixed_cost);
            let serving_cost = draw(&mut rng, cfg.serving_cost);
            let waiting_cost = draw(&mut rng, cfg.waiting_cost);
            Facility {
                id,
                fixed_cost,
                operating_cost,
                serving_cost,
                waiting_cost,
            }
        })
        .collect();
    let customers = (0..n_customers)
        .map(|id| Customer {
            id,
            demand_rate: draw(&mut rng, cfg.demand_rate),
        })
        .collect();
    let access = (0..n_facilities * n_customers)
        .map(|_| draw(&mut rng, cfg.access_cost))
        .collect();

    Instance::new(facilities, customers, access, family)
        .expect("generator ranges must produce a valid instance")
}

/// The 27 benchmark-sized instances; instance `k` uses a seed derived from
/// `seed` and `k`.
pub fn generate_suite(cfg: &GeneratorConfig, seed: u64, family: &CostFunction) -> Vec<SuiteEntry> {
    STANDARD_SUITE
        .iter()
        .enumerate()
        .map(|(k, &(name, n, m))| {
            let sub_seed = seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(k as u64 + 1);
            SuiteEntry {
                name: name.to_string(),
                seed: sub_seed,
                instance: generate_with(cfg, n, m, sub_seed, family.clone()),
            }
        })
        .collect()
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        // keep the stream aligned for degenerate ranges
        let _: f64 = rng.random();
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_ranges_and_costs() {
        let inst = generate_instance(10, 50, 1, CostFunction::Linear);
        assert_eq!(inst.n_facilities(), 10);
        assert_eq!(inst.n_customers(), 50);
        for f in inst.facilities() {
            assert!((1.0..=5.0).contains(&f.serving_cost));
            assert!((50.0..=300.0).contains(&f.waiting_cost));
            assert_eq!(f.operating_cost, 1.0);
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_instance(7, 13, 42, CostFunction::Fractional);
        let b = generate_instance(7, 13, 42, CostFunction::Fractional);
        assert_eq!(a, b);
        assert_ne!(a, generate_instance(7, 13, 43, CostFunction::Fractional));
    }

    #[test]
    fn family_changes_only_operating_cost() {
        let lin = generate_instance(10, 50, 1, CostFunction::Linear);
        let frac = generate_instance(10, 50, 1, CostFunction::Fractional);
        assert_eq!(lin.customers(), frac.customers());
        for i in 0..10 {
            let (a, b) = (&lin.facilities()[i], &frac.facilities()[i]);
            assert_eq!(a.fixed_cost, b.fixed_cost);
            assert_eq!(a.serving_cost, b.serving_cost);
            assert_eq!(a.waiting_cost, b.waiting_cost);
            assert_eq!(b.operating_cost, 100.0);
            assert_eq!(lin.access_row(i), frac.access_row(i));
        }
        let sqrt = generate_instance(10, 50, 1, CostFunction::SquareRoot);
        assert!(sqrt.facilities().iter().all(|f| f.operating_cost == 10.0));
    }

    #[test]
    fn parameter_ranges_over_many_draws() {
        // 100 x 100 facilities = 10^4 draws of s and w
        for seed in 0..100 {
            let inst = generate_instance(100, 1, seed, CostFunction::Linear);
            for f in inst.facilities() {
                assert!((1.0..=5.0).contains(&f.serving_cost));
                assert!((50.0..=300.0).contains(&f.waiting_cost));
                assert!((500.0..=3000.0).contains(&f.fixed_cost));
            }
        }
    }

    #[test]
    fn suite_has_benchmark_shape() {
        let suite = generate_suite(&GeneratorConfig::default(), 7, &CostFunction::SquareRoot);
        assert_eq!(suite.len(), 27);
        assert_eq!(suite[8].name, "P25");
        assert_eq!(suite[8].instance.n_facilities(), 30);
        assert_eq!(suite[8].instance.n_customers(), 150);
        let seeds: std::collections::BTreeSet<u64> = suite.iter().map(|e| e.seed).collect();
        assert_eq!(seeds.len(), 27);
    }
}
