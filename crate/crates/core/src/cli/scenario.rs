//! Scenario files: a strict JSON description of an economy, a prior and the
//! engine parameters.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{PriorSpec, SimConfig, DEFAULT_BINS, DEFAULT_MAX_STEPS};
use crate::error::{Error, Result};
use crate::prefs::{Bundle, UtilitySpec};
use crate::trade::{Allocation, Economy, Household, PARETO_TOL};

/// Scenarios shipped with the crate, addressable by name.
pub const BUNDLED: [(&str, &str); 4] = [
    ("example3", include_str!("../../scenarios/example3.json")),
    ("example4_sticky", include_str!("../../scenarios/example4_sticky.json")),
    ("example5_uniform", include_str!("../../scenarios/example5_uniform.json")),
    ("example5_maxspeed", include_str!("../../scenarios/example5_maxspeed.json")),
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    /// Random sequential linear trade driven by the prior.
    #[default]
    Sntp,
    /// The fixed coin-toss ladder on the symmetric 2×2 economy.
    Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HouseholdEntry {
    pub label: String,
    pub utility: UtilitySpec,
    pub endowment: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomySection {
    pub households: Vec<HouseholdEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub runs: usize,
    pub max_steps: usize,
    pub pareto_tol: f64,
    pub master_seed: u64,
    pub bins: usize,
}

impl Default for EngineSection {
    fn default() -> Self {
        Self {
            runs: 1000,
            max_steps: DEFAULT_MAX_STEPS,
            pareto_tol: PARETO_TOL,
            master_seed: 0,
            bins: DEFAULT_BINS,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub trace: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub process: Process,
    pub economy: EconomySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorSpec>,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario: {e}")))?;
        s.check()?;
        Ok(s)
    }

    /// Reads `source` as a file, or as a bundled scenario name when no such
    /// file exists.
    pub fn load(source: &Path) -> Result<Self> {
        if source.exists() {
            let text = std::fs::read_to_string(source)?;
            return Self::parse(&text);
        }
        let name = source.to_string_lossy();
        match BUNDLED.iter().find(|(n, _)| *n == name) {
            Some((_, text)) => Self::parse(text),
            None => Err(Error::Config(format!(
                "no scenario file or bundled scenario named {name:?}"
            ))),
        }
    }

    pub fn bundled(name: &str) -> Result<Self> {
        BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| Self::parse(t))
            .unwrap_or_else(|| Err(Error::Config(format!("no bundled scenario named {name:?}"))))
    }

    fn check(&self) -> Result<()> {
        match (self.process, &self.prior) {
            (Process::Sntp, None) => return Err(Error::Config("an sntp scenario needs a prior".into())),
            (Process::Ladder, _) => {
                let canonical = ladder_economy()?;
                if self.economy != canonical {
                    return Err(Error::Config(
                        "the ladder process runs only on its own symmetric 2×2 economy".into(),
                    ));
                }
            }
            _ => {}
        }
        self.to_config().map(|_| ())
    }

    pub fn economy(&self) -> Result<Economy> {
        Economy::new(
            self.economy
                .households
                .iter()
                .map(|h| Household {
                    label: h.label.clone(),
                    utility: h.utility.clone(),
                })
                .collect(),
        )
        .map_err(config)
    }

    pub fn initial(&self) -> Result<Allocation> {
        let bundles = self
            .economy
            .households
            .iter()
            .map(|h| Bundle::new(h.endowment.clone()))
            .collect::<Result<Vec<_>>>()
            .map_err(config)?;
        Allocation::new(bundles).map_err(config)
    }

    /// The engine configuration; ladder scenarios get a placeholder prior.
    pub fn to_config(&self) -> Result<SimConfig> {
        let prior = match &self.prior {
            Some(p) => p.clone(),
            None => PriorSpec::new(crate::engine::QPrior::UniformArc, crate::trade::SpeedPrior::MaxSpeed)?,
        };
        let mut cfg = SimConfig::new(self.economy()?, self.initial()?, prior);
        cfg.runs = self.engine.runs;
        cfg.max_steps = self.engine.max_steps;
        cfg.pareto_tol = self.engine.pareto_tol;
        cfg.master_seed = self.engine.master_seed;
        cfg.bins = self.engine.bins;
        cfg.validate().map_err(config)?;
        Ok(cfg)
    }
}

fn config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn ladder_economy() -> Result<EconomySection> {
    let u = UtilitySpec::cobb_douglas_log(vec![0.5, 0.5])?;
    Ok(EconomySection {
        households: vec![
            HouseholdEntry {
                label: "h1".into(),
                utility: u.clone(),
                endowment: vec![2.0, 1.0],
            },
            HouseholdEntry {
                label: "h2".into(),
                utility: u,
                endowment: vec![1.0, 2.0],
            },
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse() {
        for (name, _) in BUNDLED {
            let s = ScenarioFile::bundled(name).unwrap();
            assert_eq!(s.name, name);
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let (_, text) = BUNDLED[1];
        let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
        v["prior"]["q_prior"]["sigma_angel"] = 0.1.into();
        assert!(matches!(ScenarioFile::parse(&v.to_string()), Err(Error::Config(_))));
        let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
        v["engine"]["seed"] = 3.into();
        assert!(matches!(ScenarioFile::parse(&v.to_string()), Err(Error::Config(_))));
    }

    #[test]
    fn inconsistent_economies_are_config_errors() {
        let (_, text) = BUNDLED[1];
        let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
        v["economy"]["households"][0]["endowment"] = serde_json::json!([1.0, -1.0]);
        assert!(matches!(ScenarioFile::parse(&v.to_string()), Err(Error::Config(_))));
        let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
        v["economy"]["households"][0]["endowment"] = serde_json::json!([1.0, 1.0, 1.0]);
        assert!(matches!(ScenarioFile::parse(&v.to_string()), Err(Error::Config(_))));
    }
}
