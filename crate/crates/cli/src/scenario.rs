//! Scenario file ingestion. JSON with a fixed schema; unknown fields are
//! rejected. Every number may be written as a decimal or as an exact
//! rational string "a/b", parsed in integer arithmetic before conversion.

use kelly_slc_core::{BoxConstraints, Channel, Prior, RewardMatrix, Scenario};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Float(f64),
    Text(String),
}

impl Num {
    pub fn value(&self) -> Result<f64, String> {
        match self {
            Num::Float(f) => Ok(*f),
            Num::Text(s) => parse_rational(s),
        }
    }
}

fn parse_rational(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let a: i128 = num.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let b: i128 = den.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if b == 0 {
            return Err(format!("zero denominator in {s:?}"));
        }
        Ok(a as f64 / b as f64)
    } else {
        s.parse().map_err(|_| format!("not a number: {s:?}"))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    pub c1: Num,
    pub rho1: Num,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub lo: Num,
    pub hi: Num,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub n_races: u64,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub prior: Vec<Num>,
    pub channel: Vec<Vec<Num>>,
    pub reward: Vec<Vec<Num>>,
    pub cost: CostSpec,
    #[serde(default)]
    pub constraints: Option<ConstraintSpec>,
    #[serde(default)]
    pub simulation: Option<SimulationSpec>,
}

fn matrix(rows: &[Vec<Num>]) -> Result<Vec<Vec<f64>>, String> {
    rows.iter()
        .map(|row| row.iter().map(Num::value).collect())
        .collect()
}

impl ScenarioFile {
    /// Parse a JSON document; errors here are "parse failure" (exit 3).
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    /// Assemble a validated core Scenario; errors here are "invalid
    /// scenario" (exit 2) with the aggregated report text.
    pub fn build(&self) -> Result<(Scenario, Option<SimulationSpec>), String> {
        let prior_vals: Vec<f64> =
            self.prior.iter().map(Num::value).collect::<Result<_, _>>()?;
        let prior = Prior::new(prior_vals).map_err(|e| e.to_string())?;
        let channel = Channel::new(matrix(&self.channel)?).map_err(|e| e.to_string())?;
        let reward = RewardMatrix::new(matrix(&self.reward)?).map_err(|e| e.to_string())?;
        let constraints = match &self.constraints {
            Some(c) => Some(BoxConstraints { lo: c.lo.value()?, hi: c.hi.value()? }),
            None => None,
        };
        let c1 = self.cost.c1.value()?;
        if !(c1 > 0.0) {
            return Err(format!("cost.c1 must be positive, got {c1}"));
        }
        let scenario = Scenario::new(prior, channel, reward, c1, self.cost.rho1.value()?, constraints)
            .map_err(|e| e.to_string())?;
        let sim = match &self.simulation {
            Some(s) => {
                if s.n_races == 0 {
                    return Err("simulation.n_races must be at least 1".into());
                }
                Some(SimulationSpec { n_races: s.n_races, seed: s.seed })
            }
            None => None,
        };
        Ok((scenario, sim))
    }
}

/// A strategy override file: either a bare row-stochastic matrix or any
/// object carrying a "strategy" field (such as saved analyze output).
pub fn parse_strategy_override(text: &str) -> Result<Vec<Vec<f64>>, String> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Override {
        Bare(Vec<Vec<Num>>),
        Wrapped { strategy: Vec<Vec<Num>> },
    }
    let parsed: Override = serde_json::from_str(text).map_err(|e| e.to_string())?;
    match parsed {
        Override::Bare(rows) | Override::Wrapped { strategy: rows } => matrix(&rows),
    }
}
