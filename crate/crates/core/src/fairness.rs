//! Windowed aggregate throughput carried across scheduling periods.

use serde::{Deserialize, Serialize};

use crate::params::SimParams;
use crate::schedule::Schedule;

/// Per-SU exponentially filtered throughput `R` and the period counter `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessState {
    pub r: Vec<f64>,
    /// Index of the period about to be scheduled; 1 before the first update.
    pub k: u64,
}

/// Affine map from a period's packet count to the value a fair objective
/// sees for one SU: `offset + scale * packets`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuOffset {
    pub offset: f64,
    pub scale: f64,
}

impl SuOffset {
    pub fn value(&self, packets: u64) -> f64 {
        self.offset + self.scale * packets as f64
    }
}

impl FairnessState {
    pub fn new(n_sus: usize) -> Self {
        Self {
            r: vec![0.0; n_sus],
            k: 1,
        }
    }

    /// Effective filter length `min(k, window)`.
    pub fn effective_window(&self, window: usize) -> f64 {
        self.k.min(window as u64) as f64
    }

    /// Folds the period's throughputs into `r` and advances `k`.
    pub fn update(&self, sched: &Schedule, p: &SimParams) -> Self {
        self.update_with(&sched.per_su_throughput, p.window)
    }

    pub fn update_with(&self, throughput: &[f64], window: usize) -> Self {
        assert_eq!(throughput.len(), self.r.len(), "throughput length");
        let m = self.effective_window(window);
        let r = self
            .r
            .iter()
            .zip(throughput)
            .map(|(&r, &x)| (1.0 - 1.0 / m) * r + x / m)
            .collect();
        Self { r, k: self.k + 1 }
    }

    /// Offsets and scales for the max-min and proportionally fair objectives.
    pub fn offsets(&self, window: usize, slots: usize) -> Vec<SuOffset> {
        let m = self.effective_window(window);
        self.r
            .iter()
            .map(|&r| SuOffset {
                offset: (1.0 - 1.0 / m) * r,
                scale: 1.0 / (m * slots as f64),
            })
            .collect()
    }

    /// Offsets divided by each SU's target weight.
    pub fn weighted_offsets(&self, window: usize, slots: usize, weights: &[f64]) -> Vec<SuOffset> {
        self.offsets(window, slots)
            .into_iter()
            .zip(weights)
            .map(|(o, &eta)| SuOffset {
                offset: o.offset / eta,
                scale: o.scale / eta,
            })
            .collect()
    }
}

/// `(offset, scale)` per SU for the parameters' window and weights-free
/// objectives.
pub fn effective_objective_offsets(state: &FairnessState, p: &SimParams) -> Vec<SuOffset> {
    state.offsets(p.window, p.slots_per_period)
}
