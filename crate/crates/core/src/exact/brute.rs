//! Exhaustive reference solver for tiny instances.
//!
//! Every `(f, t)` pair is tried empty or with each SU in turn, subject to the
//! antenna limit, and leaves without full coverage are discarded. Objective
//! values are computed straight from the assignment so this module shares no
//! scoring code with the branch-and-bound solver.

use super::{check_instance, ObjectiveKind, SolveError, SolveResult};
use crate::channel::RateMatrix;
use crate::fairness::FairnessState;
use crate::params::SimParams;
use crate::schedule::Schedule;

/// Largest candidate count `(N + 1)^(F T)` accepted by [`brute_force`].
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

pub fn brute_force(
    kind: ObjectiveKind,
    u: &RateMatrix,
    fs: &FairnessState,
    p: &SimParams,
) -> Result<SolveResult, SolveError> {
    brute_force_limit(kind, u, fs, p, BRUTE_FORCE_LIMIT)
}

pub fn brute_force_limit(
    kind: ObjectiveKind,
    u: &RateMatrix,
    fs: &FairnessState,
    p: &SimParams,
    limit: f64,
) -> Result<SolveResult, SolveError> {
    check_instance(u, p)?;
    let candidates = ((p.n_sus + 1) as f64).powi(p.pairs() as i32);
    if candidates > limit {
        return Err(SolveError::TooLarge { candidates });
    }
    let mut search = Search {
        kind,
        u,
        p,
        m: fs.k.min(p.window as u64) as f64,
        r: &fs.r,
        holder: vec![None; p.pairs()],
        used: vec![vec![0; p.n_sus]; p.slots_per_period],
        best: None,
        leaves: 0,
    };
    search.visit(0);
    let (holder, _) = search.best.take().expect("a feasible instance has a covering schedule");
    let nt = p.slots_per_period;
    let schedule = Schedule::from_triples(
        u,
        nt,
        holder
            .iter()
            .enumerate()
            .filter_map(|(k, h)| h.map(|i| (i, k / nt, k % nt))),
    );
    let objective = search.evaluate(&schedule.per_su_throughput).reported;
    Ok(SolveResult {
        schedule,
        objective,
        nodes_explored: search.leaves,
        proven_optimal: true,
    })
}

#[derive(Clone, Copy)]
struct Value {
    reported: f64,
    zeros: usize,
    log_sum: f64,
}

impl Value {
    fn beats(&self, other: &Value, kind: ObjectiveKind) -> bool {
        match kind {
            ObjectiveKind::PropFair => {
                self.zeros < other.zeros || (self.zeros == other.zeros && self.log_sum > other.log_sum)
            }
            _ => self.reported > other.reported,
        }
    }
}

struct Search<'a> {
    kind: ObjectiveKind,
    u: &'a RateMatrix,
    p: &'a SimParams,
    m: f64,
    r: &'a [f64],
    holder: Vec<Option<usize>>,
    used: Vec<Vec<usize>>,
    best: Option<(Vec<Option<usize>>, Value)>,
    leaves: u64,
}

impl Search<'_> {
    fn visit(&mut self, k: usize) {
        let nt = self.p.slots_per_period;
        if k == self.holder.len() {
            self.leaf();
            return;
        }
        let uncovered = (0..self.p.n_sus)
            .filter(|&i| !self.holder[..k].contains(&Some(i)))
            .count();
        if uncovered > self.holder.len() - k {
            return;
        }
        let t = k % nt;
        self.holder[k] = None;
        self.visit(k + 1);
        for i in 0..self.p.n_sus {
            if self.used[t][i] < self.p.antennas[i] {
                self.used[t][i] += 1;
                self.holder[k] = Some(i);
                self.visit(k + 1);
                self.used[t][i] -= 1;
            }
        }
        self.holder[k] = None;
    }

    fn leaf(&mut self) {
        self.leaves += 1;
        let n = self.p.n_sus;
        if (0..n).any(|i| !self.holder.contains(&Some(i))) {
            return;
        }
        let nt = self.p.slots_per_period;
        let mut thr = vec![0.0; n];
        for (k, h) in self.holder.iter().enumerate() {
            if let Some(i) = *h {
                thr[i] += self.u.get(i, k / nt) as f64;
            }
        }
        for x in &mut thr {
            *x /= nt as f64;
        }
        let v = self.evaluate(&thr);
        if self.best.as_ref().is_none_or(|(_, b)| v.beats(b, self.kind)) {
            self.best = Some((self.holder.clone(), v));
        }
    }

    fn evaluate(&self, thr: &[f64]) -> Value {
        let m = self.m;
        let blended: Vec<f64> = self
            .r
            .iter()
            .zip(thr)
            .map(|(&r, &x)| (1.0 - 1.0 / m) * r + x / m)
            .collect();
        let (reported, zeros, log_sum) = match self.kind {
            ObjectiveKind::ThroughputMax => (thr.iter().sum(), 0, 0.0),
            ObjectiveKind::MaxMin => (blended.iter().copied().fold(f64::INFINITY, f64::min), 0, 0.0),
            ObjectiveKind::WeightedMaxMin => (
                blended
                    .iter()
                    .zip(&self.p.weights)
                    .map(|(b, w)| b / w)
                    .fold(f64::INFINITY, f64::min),
                0,
                0.0,
            ),
            ObjectiveKind::PropFair => {
                let zeros = blended.iter().filter(|&&b| b <= 0.0).count();
                let log_sum: f64 = blended.iter().filter(|&&b| b > 0.0).map(|b| b.ln()).sum();
                let reported = if zeros > 0 { f64::NEG_INFINITY } else { log_sum };
                (reported, zeros, log_sum)
            }
        };
        Value {
            reported,
            zeros,
            log_sum,
        }
    }
}
