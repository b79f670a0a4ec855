//! Experiment plans (TOML).
//!
//! ```toml
//! scenario = "fig4.toml"            # path relative to the plan, or an inline table
//! schedulers = ["wmaxmin/exact", "wmaxmin/heuristic"]
//! output = "fig4.csv"
//! seed = 1
//! replications = 2
//! warmup_slots = 100
//!
//! [sweep]
//! field = "window"
//! values = [1, 5, 10]
//!
//! [policy]
//! kind = "adaptive"                  # or kind = "fixed", periods = 200
//! alpha = 0.05
//! half_width = 0.5
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, ScenarioConfig};
use crate::exact::DEFAULT_NODE_BUDGET;
use crate::harness::sim::{Scheduler, DEFAULT_WARMUP_SLOTS};
use crate::harness::HarnessError;
use crate::params::SimParams;

pub const DEFAULT_INITIAL_PERIODS: u64 = 50;
pub const DEFAULT_MAX_PERIODS: u64 = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    Path(PathBuf),
    Inline(ScenarioConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub field: String,
    pub values: Vec<f64>,
}

/// How many periods each replication simulates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ReplicationPolicy {
    Fixed {
        periods: u64,
    },
    /// Pilot of `initial` periods, then as many more as the sample-size
    /// formula asks for at confidence `1 - alpha` and half-width `half_width`.
    Adaptive {
        alpha: f64,
        half_width: f64,
        #[serde(default = "default_initial")]
        initial: u64,
        #[serde(default = "default_max")]
        max_periods: u64,
    },
}

fn default_initial() -> u64 {
    DEFAULT_INITIAL_PERIODS
}

fn default_max() -> u64 {
    DEFAULT_MAX_PERIODS
}

impl Default for ReplicationPolicy {
    fn default() -> Self {
        ReplicationPolicy::Adaptive {
            alpha: 0.05,
            half_width: 0.5,
            initial: DEFAULT_INITIAL_PERIODS,
            max_periods: DEFAULT_MAX_PERIODS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub scenario: ScenarioSource,
    pub schedulers: Vec<Scheduler>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub policy: ReplicationPolicy,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Master seed; the scenario's `rng_seed` when absent.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_replications")]
    pub replications: u64,
    #[serde(default = "default_warmup")]
    pub warmup_slots: usize,
    #[serde(default = "default_budget")]
    pub node_budget: u64,
}

fn default_output() -> PathBuf {
    PathBuf::from("results.csv")
}

fn default_replications() -> u64 {
    1
}

fn default_warmup() -> usize {
    DEFAULT_WARMUP_SLOTS
}

fn default_budget() -> u64 {
    DEFAULT_NODE_BUDGET
}

/// A plan with its scenario loaded and every sweep point validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedPlan {
    pub plan: ExperimentPlan,
    pub master_seed: u64,
    /// `(sweep value, parameters)`; a single `None` point without a sweep.
    pub points: Vec<(Option<f64>, SimParams)>,
}

impl ExperimentPlan {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Plan(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf), HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::from_toml_str(&text)?, base))
    }

    /// Loads the scenario (paths are relative to `base`) and checks the plan.
    pub fn resolve(&self, base: &Path) -> Result<ResolvedPlan, HarnessError> {
        let scenario = match &self.scenario {
            ScenarioSource::Inline(c) => c.clone(),
            ScenarioSource::Path(p) => ScenarioConfig::load(base.join(p))?,
        };
        if self.schedulers.is_empty() {
            return Err(HarnessError::Plan("no schedulers listed".into()));
        }
        if self.replications == 0 {
            return Err(HarnessError::Plan("replications must be at least 1".into()));
        }
        match self.policy {
            ReplicationPolicy::Fixed { periods } if periods == 0 => {
                return Err(HarnessError::Plan("fixed policy needs at least one period".into()))
            }
            ReplicationPolicy::Adaptive {
                alpha,
                half_width,
                initial,
                max_periods,
            } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(HarnessError::Plan(format!("alpha {alpha} is outside (0, 1)")));
                }
                if !(half_width > 0.0 && half_width.is_finite()) {
                    return Err(HarnessError::Plan(format!("half_width {half_width} must be positive")));
                }
                if initial < 2 || max_periods < initial {
                    return Err(HarnessError::Plan(
                        "adaptive policy needs 2 <= initial <= max_periods".into(),
                    ));
                }
            }
            _ => {}
        }
        let points = match &self.sweep {
            None => vec![(None, scenario.to_params()?)],
            Some(s) => {
                if s.values.is_empty() {
                    return Err(HarnessError::Plan(format!("sweep over `{}` has no values", s.field)));
                }
                s.values
                    .iter()
                    .map(|&v| Ok((Some(v), scenario.with_field(&s.field, v)?.to_params()?)))
                    .collect::<Result<Vec<_>, ConfigError>>()?
            }
        };
        let master_seed = self.seed.unwrap_or(points[0].1.rng_seed);
        Ok(ResolvedPlan {
            plan: self.clone(),
            master_seed,
            points,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLAN: &str = r#"
        schedulers = ["thrmax", "maxmin/heuristic"]
        seed = 9
        [scenario]
        n_sus = 3
        [sweep]
        field = "window"
        values = [1, 5]
        [policy]
        kind = "fixed"
        periods = 4
    "#;

    #[test]
    fn parses_and_resolves() {
        let plan = ExperimentPlan::from_toml_str(PLAN).unwrap();
        assert_eq!(plan.policy, ReplicationPolicy::Fixed { periods: 4 });
        assert_eq!(plan.warmup_slots, 100);
        let r = plan.resolve(Path::new(".")).unwrap();
        assert_eq!(r.master_seed, 9);
        assert_eq!(r.points.len(), 2);
        assert_eq!(r.points[1].1.window, 5);
        assert_eq!(r.points[1].1.n_sus, 3);
    }

    #[test]
    fn default_policy_is_adaptive() {
        let plan = ExperimentPlan::from_toml_str("schedulers = [\"maxmin\"]\n[scenario]\n").unwrap();
        assert!(matches!(plan.policy, ReplicationPolicy::Adaptive { initial: 50, .. }));
    }

    #[test]
    fn rejects_bad_plans() {
        assert!(ExperimentPlan::from_toml_str("schedulers = [\"thrmax/heuristic\"]\n[scenario]\n").is_err());
        let bad_sweep = PLAN.replace("values = [1, 5]", "values = [1.5]");
        let plan = ExperimentPlan::from_toml_str(&bad_sweep).unwrap();
        assert!(plan.resolve(Path::new(".")).is_err());
        let bad_alpha = "schedulers = [\"maxmin\"]\n[scenario]\n[policy]\nkind = \"adaptive\"\nalpha = 1.5\nhalf_width = 0.5\n";
        let plan = ExperimentPlan::from_toml_str(bad_alpha).unwrap();
        assert!(plan.resolve(Path::new(".")).is_err());
    }
}
