//! Window-size search for the weighted max-min scheduler.

use serde::{Deserialize, Serialize};

use super::{solve, ObjectiveKind, SolveError, SolveOptions, SolveResult};
use crate::channel::RateMatrix;
use crate::fairness::FairnessState;
use crate::metrics::jain_index;
use crate::params::SimParams;

/// Requirement on the period's schedule that a window size must meet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhiConstraint {
    /// Total throughput of the period at least this many packets per slot.
    MinTotal(f64),
    /// Jain index of the period's throughputs at least this value.
    MinJain(f64),
}

impl PhiConstraint {
    pub fn holds(&self, throughput: &[f64]) -> bool {
        match *self {
            PhiConstraint::MinTotal(omega) => throughput.iter().sum::<f64>() >= omega,
            PhiConstraint::MinJain(j) => jain_index(throughput).is_some_and(|x| x >= j),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiSearchResult {
    pub phi: usize,
    pub result: SolveResult,
}

/// Solves weighted max-min once per candidate window and keeps the best
/// objective among schedules meeting `constraint`. Ties keep the earlier
/// candidate.
pub fn solve_phi_search(
    u: &RateMatrix,
    fs: &FairnessState,
    p: &SimParams,
    candidates: &[usize],
    constraint: PhiConstraint,
    opts: &SolveOptions,
) -> Result<PhiSearchResult, SolveError> {
    let mut best: Option<PhiSearchResult> = None;
    for &phi in candidates {
        let mut q = p.clone();
        q.window = phi.max(1);
        let r = solve(ObjectiveKind::WeightedMaxMin, u, fs, &q, opts)?;
        if !constraint.holds(&r.schedule.per_su_throughput) {
            continue;
        }
        if best.as_ref().is_none_or(|b| r.objective > b.result.objective) {
            best = Some(PhiSearchResult { phi, result: r });
        }
    }
    best.ok_or(SolveError::NoFeasiblePhi)
}
