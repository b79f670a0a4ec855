//! Binary (SU, frequency, slot) assignments.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::RateMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleViolation {
    #[error("SU {su} gets no (frequency, slot) pair")]
    Uncovered { su: usize },
    #[error("frequency {freq} is shared in slot {slot}")]
    Collision { freq: usize, slot: usize },
    #[error("SU {su} uses more than {antennas} frequencies in slot {slot}")]
    Antennas {
        su: usize,
        slot: usize,
        antennas: usize,
    },
    #[error("schedule shape does not match the rate matrix")]
    Shape,
}

/// Assignment tensor plus the per-SU throughput it yields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    n_sus: usize,
    n_freqs: usize,
    n_slots: usize,
    assign: Vec<bool>,
    /// Packets per slot delivered to each SU over the period.
    pub per_su_throughput: Vec<f64>,
}

impl Schedule {
    pub fn empty(n_sus: usize, n_freqs: usize, n_slots: usize) -> Self {
        Self {
            n_sus,
            n_freqs,
            n_slots,
            assign: vec![false; n_sus * n_freqs * n_slots],
            per_su_throughput: vec![0.0; n_sus],
        }
    }

    /// Builds a schedule from `(su, freq, slot)` triples and fills in the
    /// throughputs from `u`.
    pub fn from_triples(
        u: &RateMatrix,
        n_slots: usize,
        triples: impl IntoIterator<Item = (usize, usize, usize)>,
    ) -> Self {
        let mut s = Self::empty(u.n_sus(), u.n_freqs(), n_slots);
        for (i, f, t) in triples {
            s.set(i, f, t, true);
        }
        s.refresh_throughput(u);
        s
    }

    fn idx(&self, i: usize, f: usize, t: usize) -> usize {
        (i * self.n_freqs + f) * self.n_slots + t
    }

    pub fn n_sus(&self) -> usize {
        self.n_sus
    }

    pub fn n_freqs(&self) -> usize {
        self.n_freqs
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn get(&self, i: usize, f: usize, t: usize) -> bool {
        self.assign[self.idx(i, f, t)]
    }

    pub fn set(&mut self, i: usize, f: usize, t: usize, on: bool) {
        let k = self.idx(i, f, t);
        self.assign[k] = on;
    }

    /// SU holding `(f, t)`, if any.
    pub fn holder(&self, f: usize, t: usize) -> Option<usize> {
        (0..self.n_sus).find(|&i| self.get(i, f, t))
    }

    /// Iterates over every assigned `(su, freq, slot)` in row-major order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let (nf, nt) = (self.n_freqs, self.n_slots);
        self.assign
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(move |(k, _)| (k / (nf * nt), (k / nt) % nf, k % nt))
    }

    /// Number of slots in which SU `i` uses frequency `f`.
    pub fn count(&self, i: usize, f: usize) -> usize {
        (0..self.n_slots).filter(|&t| self.get(i, f, t)).count()
    }

    /// Sum over the period of `U_if` for each SU, in packets.
    pub fn packets(&self, u: &RateMatrix) -> Vec<u64> {
        (0..self.n_sus)
            .map(|i| {
                (0..self.n_freqs)
                    .map(|f| self.count(i, f) as u64 * u.get(i, f) as u64)
                    .sum()
            })
            .collect()
    }

    pub fn refresh_throughput(&mut self, u: &RateMatrix) {
        let t = self.n_slots as f64;
        self.per_su_throughput = self.packets(u).into_iter().map(|k| k as f64 / t).collect();
    }

    pub fn total_throughput(&self) -> f64 {
        self.per_su_throughput.iter().sum()
    }

    /// Checks the coverage, collision and antenna constraints as well as the
    /// stored throughputs.
    pub fn check(&self, u: &RateMatrix, antennas: &[usize]) -> Result<(), ScheduleViolation> {
        self.check_constraints(antennas, true)?;
        if u.n_sus() != self.n_sus || u.n_freqs() != self.n_freqs {
            return Err(ScheduleViolation::Shape);
        }
        let t = self.n_slots as f64;
        let stale = self
            .packets(u)
            .iter()
            .zip(&self.per_su_throughput)
            .any(|(&k, &thr)| (k as f64 / t - thr).abs() > 1e-9);
        if stale {
            return Err(ScheduleViolation::Shape);
        }
        Ok(())
    }

    /// Collision and antenna constraints, plus coverage when `coverage` is set.
    pub fn check_constraints(
        &self,
        antennas: &[usize],
        coverage: bool,
    ) -> Result<(), ScheduleViolation> {
        if antennas.len() != self.n_sus || self.per_su_throughput.len() != self.n_sus {
            return Err(ScheduleViolation::Shape);
        }
        for f in 0..self.n_freqs {
            for t in 0..self.n_slots {
                if (0..self.n_sus).filter(|&i| self.get(i, f, t)).count() > 1 {
                    return Err(ScheduleViolation::Collision { freq: f, slot: t });
                }
            }
        }
        for (i, &a) in antennas.iter().enumerate() {
            for t in 0..self.n_slots {
                if (0..self.n_freqs).filter(|&f| self.get(i, f, t)).count() > a {
                    return Err(ScheduleViolation::Antennas {
                        su: i,
                        slot: t,
                        antennas: a,
                    });
                }
            }
            if coverage && (0..self.n_freqs).all(|f| self.count(i, f) == 0) {
                return Err(ScheduleViolation::Uncovered { su: i });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_each_violation() {
        let u = RateMatrix::from_rows(&[vec![5, 3], vec![4, 2]]);
        let ok = Schedule::from_triples(&u, 1, [(0, 0, 0), (1, 1, 0)]);
        assert_eq!(ok.check(&u, &[1, 1]), Ok(()));
        assert_eq!(ok.per_su_throughput, vec![5.0, 2.0]);

        let uncovered = Schedule::from_triples(&u, 1, [(0, 0, 0), (0, 1, 0)]);
        assert_eq!(
            uncovered.check(&u, &[2, 2]),
            Err(ScheduleViolation::Uncovered { su: 1 })
        );
        assert_eq!(
            uncovered.check(&u, &[1, 1]),
            Err(ScheduleViolation::Antennas {
                su: 0,
                slot: 0,
                antennas: 1
            })
        );
        let clash = Schedule::from_triples(&u, 1, [(0, 0, 0), (1, 0, 0)]);
        assert_eq!(
            clash.check(&u, &[1, 1]),
            Err(ScheduleViolation::Collision { freq: 0, slot: 0 })
        );
    }

    #[test]
    fn triples_round_trip() {
        let u = RateMatrix::from_rows(&[vec![1, 2, 3], vec![4, 5, 6]]);
        let want = vec![(0, 2, 1), (1, 0, 0), (1, 1, 1)];
        let s = Schedule::from_triples(&u, 2, want.clone());
        assert_eq!(s.triples().collect::<Vec<_>>(), want);
        assert_eq!(s.holder(0, 0), Some(1));
        assert_eq!(s.holder(2, 0), None);
    }
}
