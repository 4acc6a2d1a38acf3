//! TOML case files.
//!
//! ```toml
//! format_version = 1
//! weights = [2.0, 1.0, 2.0]
//!
//! [units]
//! power = "MW"
//! energy = "MWh"
//! time = "h"
//! cost = "$/MWh"
//!
//! [meta]
//! periods = 3
//! tau = 1.0
//!
//! [network]
//! nodes = [1]
//!
//! [[devices.esses]]
//! node = 1
//! # ...
//! ```

use std::path::Path;

use flexagg::{Case, Costs, EssParams, Gen, Line, Load};
use serde::{Deserialize, Serialize};

use crate::error::{read, write, CliError, Result};
use crate::sig;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub weights: Vec<f64>,
    pub units: Units,
    pub meta: Meta,
    pub network: Network,
    #[serde(default)]
    pub devices: Devices,
    #[serde(default)]
    pub costs: CostSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub power: String,
    pub energy: String,
    pub time: String,
    pub cost: String,
}

impl Default for Units {
    fn default() -> Self {
        Self { power: "MW".into(), energy: "MWh".into(), time: "h".into(), cost: "$/MWh".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub periods: usize,
    pub tau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    pub nodes: Vec<usize>,
    #[serde(default)]
    pub lines: Vec<LineEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineEntry {
    pub from: usize,
    pub to: usize,
    pub susceptance: f64,
    pub limit: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Devices {
    #[serde(default)]
    pub loads: Vec<ProfileEntry>,
    #[serde(default)]
    pub gens: Vec<ProfileEntry>,
    #[serde(default)]
    pub esses: Vec<EssEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileEntry {
    pub node: usize,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EssEntry {
    pub node: usize,
    pub kappa: f64,
    pub eta_d: f64,
    pub eta_c: f64,
    pub p_dis_max: f64,
    pub p_chg_max: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub e0: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    #[serde(default)]
    pub gens: Vec<f64>,
    #[serde(default)]
    pub esses: Vec<f64>,
}

fn sigs(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| sig(*x)).collect()
}

impl CaseFile {
    pub fn from_case(case: &Case, name: Option<&str>, seed: Option<u64>) -> Self {
        let profile = |node: usize, min: &[f64], max: &[f64]| ProfileEntry { node, min: sigs(min), max: sigs(max) };
        Self {
            format_version: FORMAT_VERSION,
            seed,
            weights: sigs(&case.weights),
            units: Units::default(),
            meta: Meta { name: name.map(str::to_string), periods: case.periods, tau: sig(case.tau) },
            network: Network {
                nodes: case.nodes.clone(),
                lines: case
                    .lines
                    .iter()
                    .map(|l| LineEntry { from: l.from, to: l.to, susceptance: sig(l.susceptance), limit: sig(l.limit) })
                    .collect(),
            },
            devices: Devices {
                loads: case.loads.iter().map(|l| profile(l.node, &l.min, &l.max)).collect(),
                gens: case.gens.iter().map(|g| profile(g.node, &g.min, &g.max)).collect(),
                esses: case
                    .esses
                    .iter()
                    .map(|e| EssEntry {
                        node: e.node,
                        kappa: sig(e.kappa),
                        eta_d: sig(e.eta_d),
                        eta_c: sig(e.eta_c),
                        p_dis_max: sig(e.p_dis_max),
                        p_chg_max: sig(e.p_chg_max),
                        e_min: sig(e.e_min),
                        e_max: sig(e.e_max),
                        e0: sig(e.e0),
                    })
                    .collect(),
            },
            costs: CostSection { gens: sigs(&case.costs.gens), esses: sigs(&case.costs.esses) },
        }
    }

    /// Converts to a validated [`Case`].
    pub fn to_case(&self) -> Result<Case> {
        if self.format_version != FORMAT_VERSION {
            return Err(CliError::Usage(format!(
                "unsupported case format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let expected = Units::default();
        for (field, got, want) in [
            ("power", &self.units.power, &expected.power),
            ("energy", &self.units.energy, &expected.energy),
            ("time", &self.units.time, &expected.time),
            ("cost", &self.units.cost, &expected.cost),
        ] {
            if got != want {
                return Err(CliError::Usage(format!("units.{field} must be \"{want}\", got \"{got}\"")));
            }
        }
        let case = Case {
            periods: self.meta.periods,
            tau: self.meta.tau,
            nodes: self.network.nodes.clone(),
            lines: self
                .network
                .lines
                .iter()
                .map(|l| Line { from: l.from, to: l.to, susceptance: l.susceptance, limit: l.limit })
                .collect(),
            loads: self.devices.loads.iter().map(|p| Load { node: p.node, min: p.min.clone(), max: p.max.clone() }).collect(),
            gens: self.devices.gens.iter().map(|p| Gen { node: p.node, min: p.min.clone(), max: p.max.clone() }).collect(),
            esses: self
                .devices
                .esses
                .iter()
                .map(|e| EssParams {
                    node: e.node,
                    kappa: e.kappa,
                    eta_d: e.eta_d,
                    eta_c: e.eta_c,
                    p_dis_max: e.p_dis_max,
                    p_chg_max: e.p_chg_max,
                    e_min: e.e_min,
                    e_max: e.e_max,
                    e0: e.e0,
                })
                .collect(),
            costs: Costs { gens: self.costs.gens.clone(), esses: self.costs.esses.clone() },
            weights: self.weights.clone(),
        };
        case.validate()?;
        Ok(case)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::parse(origin, e))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("case files always serialize")
    }
}

pub fn load_case(path: &Path) -> Result<Case> {
    CaseFile::parse(&read(path)?, path)?.to_case()
}

pub fn save_case(path: &Path, case: &Case, name: Option<&str>, seed: Option<u64>) -> Result<()> {
    write(path, &CaseFile::from_case(case, name, seed).to_toml())
}

#[cfg(test)]
mod tests {
    use super::*;
    use flexagg::cases;

    #[test]
    fn round_trip_is_field_for_field() {
        for case in [cases::example1(), cases::example2(), cases::example3()] {
            let file = CaseFile::from_case(&case, Some("x"), Some(3));
            let text = file.to_toml();
            let back = CaseFile::parse(&text, Path::new("mem")).unwrap();
            assert_eq!(back, file);
            assert_eq!(back.to_case().unwrap(), case);
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut text = CaseFile::from_case(&cases::example3(), None, None).to_toml();
        text = text.replace("[meta]\n", "[meta]\ncolour = \"red\"\n");
        let err = CaseFile::parse(&text, Path::new("mem")).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
    }

    #[test]
    fn wrong_units_rejected() {
        let text = CaseFile::from_case(&cases::example3(), None, None).to_toml().replace("\"MW\"", "\"kW\"");
        let err = CaseFile::parse(&text, Path::new("mem")).unwrap().to_case().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("units.power"));
    }

    #[test]
    fn invalid_case_names_field() {
        let mut file = CaseFile::from_case(&cases::example2(), None, None);
        file.devices.esses[0].e0 = 9.0;
        let err = file.to_case().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("esses[0].e0"));
    }
}
