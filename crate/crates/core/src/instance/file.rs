//! JSON instance files.
//!
//! ```text
//! {
//!   "format": "eos-ssd-instance",
//!   "version": 1,
//!   "n_facilities": 2, "n_customers": 3,
//!   "cost_family": "square_root", "family_parameters": {},
//!   "facilities": [{"id": 0, "fixed_cost": .., "operating_cost": ..,
//!                   "serving_cost": .., "waiting_cost": ..}, ..],
//!   "customers": [{"id": 0, "demand_rate": ..}, ..],
//!   "access_cost": [[a_00, a_01, a_02], [a_10, a_11, a_12]]
//! }
//! ```
//!
//! Reals are written in shortest round-trip form, so reading a written file
//! reproduces every `f64` bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Customer, Facility, Instance};
use crate::costfn::CostFunction;
use crate::error::{Error, Result};

const FORMAT_TAG: &str = "eos-ssd-instance";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    format: String,
    version: u32,
    n_facilities: usize,
    n_customers: usize,
    cost_family: String,
    #[serde(default)]
    family_parameters: BTreeMap<String, f64>,
    facilities: Vec<FacilityRecord>,
    customers: Vec<CustomerRecord>,
    access_cost: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FacilityRecord {
    id: usize,
    fixed_cost: f64,
    operating_cost: f64,
    serving_cost: f64,
    waiting_cost: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomerRecord {
    id: usize,
    demand_rate: f64,
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let text = fs::read_to_string(path)?;
    Instance::from_json(&text)
}

pub fn write_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    let text = inst.to_json()?;
    fs::write(path, text)?;
    Ok(())
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if file.format != FORMAT_TAG {
            return Err(Error::invalid(
                "format",
                format!("expected `{FORMAT_TAG}`, found `{}`", file.format),
            ));
        }
        if file.version != FORMAT_VERSION {
            return Err(Error::invalid(
                "version",
                format!("unsupported version {}", file.version),
            ));
        }
        if !file.family_parameters.is_empty() {
            return Err(Error::invalid(
                "family_parameters",
                format!("family `{}` takes no parameters", file.cost_family),
            ));
        }
        if file.facilities.len() != file.n_facilities {
            return Err(Error::invalid(
                "n_facilities",
                format!(
                    "header says {} but {} records follow",
                    file.n_facilities,
                    file.facilities.len()
                ),
            ));
        }
        if file.customers.len() != file.n_customers {
            return Err(Error::invalid(
                "n_customers",
                format!(
                    "header says {} but {} records follow",
                    file.n_customers,
                    file.customers.len()
                ),
            ));
        }
        if file.access_cost.len() != file.n_facilities {
            return Err(Error::invalid(
                "access_cost",
                format!("expected {} rows, found {}", file.n_facilities, file.access_cost.len()),
            ));
        }
        for (i, row) in file.access_cost.iter().enumerate() {
            if row.len() != file.n_customers {
                return Err(Error::invalid(
                    format!("access_cost[{i}]"),
                    format!("expected {} entries, found {}", file.n_customers, row.len()),
                ));
            }
        }
        let cost: CostFunction = file.cost_family.parse()?;
        let facilities = file
            .facilities
            .into_iter()
            .map(|r| Facility {
                id: r.id,
                fixed_cost: r.fixed_cost,
                operating_cost: r.operating_cost,
                serving_cost: r.serving_cost,
                waiting_cost: r.waiting_cost,
            })
            .collect();
        let customers = file
            .customers
            .into_iter()
            .map(|r| Customer {
                id: r.id,
                demand_rate: r.demand_rate,
            })
            .collect();
        let access = file.access_cost.into_iter().flatten().collect();
        Instance::new(facilities, customers, access, cost)
    }

    /// Serializes to the instance file format. Custom cost families have no
    /// file representation and are rejected.
    pub fn to_json(&self) -> Result<String> {
        if let CostFunction::Custom(_) = self.cost {
            return Err(Error::Serialize(format!(
                "custom cost family `{}` cannot be written to an instance file",
                self.cost.name()
            )));
        }
        let file = InstanceFile {
            format: FORMAT_TAG.to_string(),
            version: FORMAT_VERSION,
            n_facilities: self.n_facilities(),
            n_customers: self.n_customers(),
            cost_family: self.cost.name().to_string(),
            family_parameters: BTreeMap::new(),
            facilities: self
                .facilities
                .iter()
                .map(|f| FacilityRecord {
                    id: f.id,
                    fixed_cost: f.fixed_cost,
                    operating_cost: f.operating_cost,
                    serving_cost: f.serving_cost,
                    waiting_cost: f.waiting_cost,
                })
                .collect(),
            customers: self
                .customers
                .iter()
                .map(|c| CustomerRecord {
                    id: c.id,
                    demand_rate: c.demand_rate,
                })
                .collect(),
            access_cost: (0..self.n_facilities())
                .map(|i| self.access_row(i).to_vec())
                .collect(),
        };
        let mut text =
            serde_json::to_string_pretty(&file).map_err(|e| Error::Serialize(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_instance;

    const MINIMAL: &str = r#"{
      "format": "eos-ssd-instance", "version": 1,
      "n_facilities": 1, "n_customers": 1,
      "cost_family": "linear", "family_parameters": {},
      "facilities": [{"id": 0, "fixed_cost": 10, "operating_cost": 1,
                      "serving_cost": 2, "waiting_cost": 4}],
      "customers": [{"id": 0, "demand_rate": 1}],
      "access_cost": [[5]]
    }"#;

    #[test]
    fn minimal_file() {
        let inst = Instance::from_json(MINIMAL).unwrap();
        assert_eq!(inst.n_facilities(), 1);
        assert_eq!(inst.n_customers(), 1);
    }

    #[test]
    fn zero_demand_is_named() {
        let text = MINIMAL.replace("\"demand_rate\": 1", "\"demand_rate\": 0");
        let err = Instance::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("demand_rate must be positive"), "{err}");
    }

    #[test]
    fn parse_errors_carry_location() {
        let text = MINIMAL.replace("\"fixed_cost\": 10", "\"fixed_cost\": \"ten\"");
        match Instance::from_json(&text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 5),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn header_must_match_records() {
        let text = MINIMAL.replace("\"n_customers\": 1", "\"n_customers\": 2");
        assert!(Instance::from_json(&text).is_err());
        let text = MINIMAL.replace("[[5]]", "[[5, 6]]");
        assert!(Instance::from_json(&text).is_err());
    }

    #[test]
    fn generated_instance_round_trips() {
        let inst = generate_instance(10, 50, 3, CostFunction::SquareRoot);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        write_instance(&inst, &path).unwrap();
        assert_eq!(read_instance(&path).unwrap(), inst);
    }

    #[test]
    fn custom_family_is_not_writable() {
        let g = CostFunction::custom("log1p", |m: f64| m.ln_1p(), |m: f64| 1.0 / (1.0 + m)).unwrap();
        let inst = generate_instance(2, 2, 1, CostFunction::Linear).with_family(g, 1.0).unwrap();
        assert!(matches!(inst.to_json(), Err(Error::Serialize(_))));
    }
}
