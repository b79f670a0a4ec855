//! One replication: cell simulation plus a scheduler, period by period.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{compute_rate_matrix, ChannelError, RateMatrix};
use crate::env::{initial_state, step_slot, RngStream};
use crate::exact::{solve, Objective, ObjectiveKind, SolveError, SolveOptions};
use crate::fairness::FairnessState;
use crate::heuristic::fairsch;
use crate::metrics::MetricsRecord;
use crate::params::{CellState, SimParams};
use crate::schedule::Schedule;

pub const DEFAULT_WARMUP_SLOTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Exact,
    Heuristic,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Exact => "exact",
            SolverKind::Heuristic => "heuristic",
        }
    }
}

/// An objective paired with the way it is solved, written `maxmin/exact`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Scheduler {
    pub objective: ObjectiveKind,
    pub solver: SolverKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad scheduler `{0}`: expected <thrmax|maxmin|wmaxmin|propfair>/<exact|heuristic>, and thrmax has no heuristic")]
pub struct SchedulerParseError(pub String);

impl Scheduler {
    pub fn new(objective: ObjectiveKind, solver: SolverKind) -> Result<Self, SchedulerParseError> {
        let s = Self { objective, solver };
        if solver == SolverKind::Heuristic && objective.heuristic_mode().is_none() {
            return Err(SchedulerParseError(s.to_string()));
        }
        Ok(s)
    }

    pub fn exact(objective: ObjectiveKind) -> Self {
        Self {
            objective,
            solver: SolverKind::Exact,
        }
    }

    /// Schedules one period. Heuristic results are scored with the same
    /// objective the exact solver would maximise.
    pub fn run(
        &self,
        u: &RateMatrix,
        fs: &FairnessState,
        p: &SimParams,
        opts: &SolveOptions,
    ) -> Result<PeriodOutcome, SolveError> {
        match self.objective.heuristic_mode().filter(|_| self.solver == SolverKind::Heuristic) {
            Some(mode) => {
                let schedule = fairsch(u, p, mode);
                let objective = Objective::new(self.objective, fs, p).value(&schedule.packets(u));
                Ok(PeriodOutcome {
                    schedule,
                    objective,
                    proven_optimal: false,
                })
            }
            None => {
                let r = solve(self.objective, u, fs, p, opts)?;
                Ok(PeriodOutcome {
                    schedule: r.schedule,
                    objective: r.objective,
                    proven_optimal: r.proven_optimal,
                })
            }
        }
    }
}

impl fmt::Display for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.objective.name(), self.solver.name())
    }
}

impl FromStr for Scheduler {
    type Err = SchedulerParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SchedulerParseError(s.to_string());
        let (obj, solver) = s.split_once('/').unwrap_or((s, "exact"));
        let objective: ObjectiveKind = obj.trim().parse().map_err(|_| bad())?;
        let solver = match solver.trim() {
            "exact" => SolverKind::Exact,
            "heuristic" => SolverKind::Heuristic,
            _ => return Err(bad()),
        };
        Self::new(objective, solver).map_err(|_| bad())
    }
}

impl TryFrom<String> for Scheduler {
    type Error = SchedulerParseError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Scheduler> for String {
    fn from(s: Scheduler) -> Self {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodOutcome {
    pub schedule: Schedule,
    pub objective: f64,
    pub proven_optimal: bool,
}

/// The simulated cell of one replication.
#[derive(Debug, Clone)]
pub struct CellRun {
    p: SimParams,
    rng: RngStream,
    state: CellState,
}

impl CellRun {
    /// Draws the initial cell and discards `warmup_slots` slots.
    pub fn new(p: &SimParams, seed: u64, warmup_slots: usize) -> Self {
        let mut rng = RngStream::new(seed);
        let mut state = initial_state(p, &mut rng);
        for _ in 0..warmup_slots {
            state = step_slot(&state, p, &mut rng);
        }
        Self {
            p: p.clone(),
            rng,
            state,
        }
    }

    pub fn state(&self) -> &CellState {
        &self.state
    }

    /// Rates for the period starting now.
    pub fn rates(&self) -> Result<RateMatrix, ChannelError> {
        compute_rate_matrix(&self.state, &self.p)
    }

    pub fn advance_period(&mut self) {
        for _ in 0..self.p.slots_per_period {
            self.state = step_slot(&self.state, &self.p, &mut self.rng);
        }
    }
}

#[derive(Debug, Error)]
pub enum PeriodError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Drives a scheduler over consecutive periods of one cell, carrying the
/// fairness state forward.
#[derive(Debug, Clone)]
pub struct Replication {
    pub cell: CellRun,
    pub fairness: FairnessState,
    pub scheduler: Scheduler,
    pub opts: SolveOptions,
    next_period: u64,
}

impl Replication {
    pub fn new(p: &SimParams, seed: u64, warmup_slots: usize, scheduler: Scheduler, opts: SolveOptions) -> Self {
        Self {
            cell: CellRun::new(p, seed, warmup_slots),
            fairness: FairnessState::new(p.n_sus),
            scheduler,
            opts,
            next_period: 0,
        }
    }

    /// Schedules the current period, records it and advances the cell.
    pub fn step(&mut self) -> Result<MetricsRecord, PeriodError> {
        let u = self.cell.rates()?;
        let p = &self.cell.p;
        let out = self.scheduler.run(&u, &self.fairness, p, &self.opts)?;
        self.fairness = self.fairness.update(&out.schedule, p);
        let rec = MetricsRecord::new(
            self.next_period,
            out.schedule.per_su_throughput.clone(),
            out.objective,
            out.proven_optimal,
        );
        self.next_period += 1;
        self.cell.advance_period();
        Ok(rec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheduler_names_round_trip() {
        for s in ["thrmax/exact", "maxmin/heuristic", "wmaxmin/exact", "propfair/heuristic"] {
            assert_eq!(s.parse::<Scheduler>().unwrap().to_string(), s);
        }
        assert_eq!("maxmin".parse::<Scheduler>().unwrap().to_string(), "maxmin/exact");
        assert!("thrmax/heuristic".parse::<Scheduler>().is_err());
        assert!("maxmin/greedy".parse::<Scheduler>().is_err());
    }

    #[test]
    fn same_seed_same_trajectory() {
        let p = SimParams::middle(4);
        let s: Scheduler = "maxmin/heuristic".parse().unwrap();
        let run = || {
            let mut r = Replication::new(&p, 11, 20, s, SolveOptions::default());
            (0..3).map(|_| r.step().unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rates_do_not_depend_on_scheduler() {
        let p = SimParams::middle(4);
        let mut a = Replication::new(&p, 5, 10, "thrmax".parse().unwrap(), SolveOptions::default());
        let mut b = Replication::new(&p, 5, 10, "propfair/heuristic".parse().unwrap(), SolveOptions::default());
        for _ in 0..3 {
            assert_eq!(a.cell.rates().unwrap(), b.cell.rates().unwrap());
            a.step().unwrap();
            b.step().unwrap();
        }
    }
}
