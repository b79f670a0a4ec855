use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fairness::{FairnessState, SuOffset};
use crate::heuristic::HeuristicMode;
use crate::params::SimParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ObjectiveKind {
    ThroughputMax,
    MaxMin,
    WeightedMaxMin,
    PropFair,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 4] = [
        ObjectiveKind::ThroughputMax,
        ObjectiveKind::MaxMin,
        ObjectiveKind::WeightedMaxMin,
        ObjectiveKind::PropFair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::ThroughputMax => "thrmax",
            ObjectiveKind::MaxMin => "maxmin",
            ObjectiveKind::WeightedMaxMin => "wmaxmin",
            ObjectiveKind::PropFair => "propfair",
        }
    }

    /// FAIRSCH variant for this objective; throughput maximisation has none.
    pub fn heuristic_mode(self) -> Option<HeuristicMode> {
        match self {
            ObjectiveKind::ThroughputMax => None,
            ObjectiveKind::MaxMin => Some(HeuristicMode::MaxMin),
            ObjectiveKind::WeightedMaxMin => Some(HeuristicMode::WeightedMaxMin),
            ObjectiveKind::PropFair => Some(HeuristicMode::PropFair),
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObjectiveKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scheduler `{s}`"))
    }
}

/// An objective bound to per-SU affine terms `offset + scale * packets`.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    kind: ObjectiveKind,
    terms: Vec<SuOffset>,
}

impl Objective {
    pub fn new(kind: ObjectiveKind, fs: &FairnessState, p: &SimParams) -> Self {
        let slots = p.slots_per_period;
        let terms = match kind {
            ObjectiveKind::ThroughputMax => vec![
                SuOffset {
                    offset: 0.0,
                    scale: 1.0 / slots as f64,
                };
                p.n_sus
            ],
            ObjectiveKind::MaxMin | ObjectiveKind::PropFair => fs.offsets(p.window, slots),
            ObjectiveKind::WeightedMaxMin => fs.weighted_offsets(p.window, slots, &p.weights),
        };
        Self { kind, terms }
    }

    pub fn from_terms(kind: ObjectiveKind, terms: Vec<SuOffset>) -> Self {
        Self { kind, terms }
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn terms(&self) -> &[SuOffset] {
        &self.terms
    }

    pub fn su_values(&self, packets: &[u64]) -> Vec<f64> {
        self.terms.iter().zip(packets).map(|(t, &k)| t.value(k)).collect()
    }

    /// Reported objective value of a schedule with the given packet counts.
    pub fn value(&self, packets: &[u64]) -> f64 {
        let v = self.su_values(packets);
        match self.kind {
            ObjectiveKind::ThroughputMax => v.iter().sum(),
            ObjectiveKind::MaxMin | ObjectiveKind::WeightedMaxMin => {
                v.iter().copied().fold(f64::INFINITY, f64::min)
            }
            ObjectiveKind::PropFair => {
                if v.iter().any(|&x| x <= 0.0) {
                    f64::NEG_INFINITY
                } else {
                    v.iter().map(|x| x.ln()).sum()
                }
            }
        }
    }

    /// Finite search key: like [`Objective::value`] but each zero term of the
    /// log sum counts as `zero_penalty`.
    pub(crate) fn score(&self, packets: &[u64], zero_penalty: f64) -> f64 {
        match self.kind {
            ObjectiveKind::PropFair => self
                .su_values(packets)
                .iter()
                .map(|&x| if x > 0.0 { x.ln() } else { zero_penalty })
                .sum(),
            _ => self.value(packets),
        }
    }
}
