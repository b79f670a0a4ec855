//! Exact per-period schedulers and a brute-force reference.
//!
//! Throughput maximisation is an integer min-cost flow. The fair objectives
//! use LP-based branch and bound. Both work on the per-(SU, frequency) slot
//! counts and turn the optimal counts into a slot-level schedule afterwards.

mod bnb;
mod canon;
mod brute;
mod decode;
mod flow;
mod objective;
mod phi;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::RateMatrix;
use crate::fairness::FairnessState;
use crate::params::SimParams;
use crate::schedule::Schedule;

pub use brute::{brute_force, brute_force_limit, BRUTE_FORCE_LIMIT};
pub use decode::counts_to_schedule;
pub use objective::{Objective, ObjectiveKind};
pub use phi::{solve_phi_search, PhiConstraint, PhiSearchResult};

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("{n_sus} SUs cannot each get a pair out of {pairs}")]
    Infeasible { n_sus: usize, pairs: usize },
    #[error("brute force would visit {candidates:.3e} assignments")]
    TooLarge { candidates: f64 },
    #[error("no window size meets the side constraint")]
    NoFeasiblePhi,
    #[error("rate matrix is {got_sus}x{got_freqs}, parameters need {n_sus}x{n_freqs}")]
    Shape {
        n_sus: usize,
        n_freqs: usize,
        got_sus: usize,
        got_freqs: usize,
    },
    #[error("LP relaxation failed: {0}")]
    Lp(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Branch-and-bound nodes to explore before returning the incumbent.
    pub node_budget: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub schedule: Schedule,
    /// Objective value; `-inf` for proportional fairness when some SU ends
    /// with zero aggregate throughput.
    pub objective: f64,
    pub nodes_explored: u64,
    /// False when the node budget ran out before the search closed.
    pub proven_optimal: bool,
}

fn check_instance(u: &RateMatrix, p: &SimParams) -> Result<(), SolveError> {
    if u.n_sus() != p.n_sus || u.n_freqs() != p.n_freqs || p.antennas.len() != p.n_sus {
        return Err(SolveError::Shape {
            n_sus: p.n_sus,
            n_freqs: p.n_freqs,
            got_sus: u.n_sus(),
            got_freqs: u.n_freqs(),
        });
    }
    if p.n_sus > p.pairs() || p.antennas.iter().any(|&a| a == 0) {
        return Err(SolveError::Infeasible {
            n_sus: p.n_sus,
            pairs: p.pairs(),
        });
    }
    Ok(())
}

/// Optimal schedule for one period under the given objective.
pub fn solve(
    kind: ObjectiveKind,
    u: &RateMatrix,
    fs: &FairnessState,
    p: &SimParams,
    opts: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    let obj = Objective::new(kind, fs, p);
    solve_objective(&obj, u, p, opts)
}

/// Same as [`solve`] with explicit per-SU offsets.
pub fn solve_objective(
    obj: &Objective,
    u: &RateMatrix,
    p: &SimParams,
    opts: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    check_instance(u, p)?;
    let (counts, nodes, proven) = match obj.kind() {
        ObjectiveKind::ThroughputMax => (flow::max_throughput_counts(u, p), 0, true),
        _ => bnb::solve(obj, u, p, opts)?,
    };
    let mut schedule = counts_to_schedule(&counts, u, p);
    canon::canonicalize(&mut schedule, u, obj, p);
    let objective = obj.value(&schedule.packets(u));
    Ok(SolveResult {
        schedule,
        objective,
        nodes_explored: nodes,
        proven_optimal: proven,
    })
}

pub fn solve_thrmax(u: &RateMatrix, p: &SimParams) -> Result<SolveResult, SolveError> {
    let fs = FairnessState::new(p.n_sus);
    solve(ObjectiveKind::ThroughputMax, u, &fs, p, &SolveOptions::default())
}

pub fn solve_maxmin(
    u: &RateMatrix,
    fs: &FairnessState,
    p: &SimParams,
    opts: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    solve(ObjectiveKind::MaxMin, u, fs, p, opts)
}

pub fn solve_weighted_maxmin(
    u: &RateMatrix,
    fs: &FairnessState,
    p: &SimParams,
    opts: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    solve(ObjectiveKind::WeightedMaxMin, u, fs, p, opts)
}

pub fn solve_propfair(
    u: &RateMatrix,
    fs: &FairnessState,
    p: &SimParams,
    opts: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    solve(ObjectiveKind::PropFair, u, fs, p, opts)
}

/// Slot counts per `(su, freq)`, row-major.
pub(crate) type Counts = Vec<u32>;

/// Per-SU cap on the number of (frequency, slot) pairs.
pub(crate) fn row_caps(p: &SimParams) -> Vec<u32> {
    p.antennas
        .iter()
        .map(|&a| (a.min(p.n_freqs) * p.slots_per_period) as u32)
        .collect()
}
