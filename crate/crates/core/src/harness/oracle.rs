//! Cross-checks the exact solvers against exhaustive enumeration on random
//! small instances.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::RateMatrix;
use crate::env::{replication_seed, RngStream};
use crate::exact::{brute_force, solve, ObjectiveKind, SolveOptions, BRUTE_FORCE_LIMIT};
use crate::fairness::FairnessState;
use crate::harness::HarnessError;
use crate::params::SimParams;

pub const ORACLE_TOLERANCE: f64 = 1e-9;

/// Upper bounds for randomly drawn instances. Parsed from `NxFxT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleLimits {
    pub max_sus: usize,
    pub max_freqs: usize,
    pub max_slots: usize,
    pub max_antennas: usize,
    pub max_rate: u32,
    pub instances: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_sus: 3,
            max_freqs: 3,
            max_slots: 3,
            max_antennas: 2,
            max_rate: 9,
            instances: 200,
        }
    }
}

impl FromStr for OracleLimits {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HarnessError::Plan(format!("size limits `{s}` are not of the form NxFxT"));
        let dims: Vec<usize> = s
            .split(['x', 'X'])
            .map(|d| d.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let [n, f, t] = dims[..] else { return Err(bad()) };
        if n == 0 || f == 0 || t == 0 {
            return Err(bad());
        }
        Ok(Self {
            max_sus: n,
            max_freqs: f,
            max_slots: t,
            ..Self::default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleMismatch {
    pub instance: usize,
    pub objective: ObjectiveKind,
    pub exact: f64,
    pub brute_force: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub instances: usize,
    pub comparisons: usize,
    pub mismatches: Vec<OracleMismatch>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} instances, {} comparisons, {} mismatches",
            self.instances,
            self.comparisons,
            self.mismatches.len()
        )?;
        for m in &self.mismatches {
            writeln!(
                f,
                "  instance {} {}: exact {} brute force {}",
                m.instance, m.objective, m.exact, m.brute_force
            )?;
        }
        Ok(())
    }
}

/// A random feasible instance with a random fairness history.
pub fn random_instance(limits: &OracleLimits, rng: &mut RngStream) -> (SimParams, RateMatrix, FairnessState) {
    let (n, nf, nt) = loop {
        let n = 1 + rng.below(limits.max_sus);
        let nf = 1 + rng.below(limits.max_freqs);
        let nt = 1 + rng.below(limits.max_slots);
        if n <= nf * nt {
            break (n, nf, nt);
        }
    };
    let mut p = SimParams::middle(n);
    p.n_freqs = nf;
    p.slots_per_period = nt;
    p.window = 1 + rng.below(5);
    p.antennas = (0..n).map(|_| 1 + rng.below(limits.max_antennas)).collect();
    let raw: Vec<f64> = (0..n).map(|_| 1.0 + rng.below(20) as f64).collect();
    let total: f64 = raw.iter().sum();
    p.weights = raw.iter().map(|w| w / total).collect();
    let rows: Vec<Vec<u32>> = (0..n)
        .map(|_| (0..nf).map(|_| rng.below(limits.max_rate as usize + 1) as u32).collect())
        .collect();
    let fs = FairnessState {
        r: (0..n).map(|_| 8.0 * rng.uniform()).collect(),
        k: 1 + rng.below(5) as u64,
    };
    (p, RateMatrix::from_rows(&rows), fs)
}

/// Compares every objective on `limits.instances` random instances; instance
/// `i` is drawn from the stream seeded by `replication_seed(seed, i)`.
pub fn oracle_check(limits: &OracleLimits, seed: u64) -> Result<OracleReport, HarnessError> {
    let worst = (limits.max_sus as f64 + 1.0).powi((limits.max_freqs * limits.max_slots) as i32);
    if worst > BRUTE_FORCE_LIMIT {
        return Err(HarnessError::Plan(format!(
            "limits allow {worst:.3e} candidate schedules; brute force stops at {BRUTE_FORCE_LIMIT:.0e}"
        )));
    }
    if limits.max_antennas == 0 {
        return Err(HarnessError::Plan("max_antennas must be at least 1".into()));
    }
    let per_instance: Vec<Vec<OracleMismatch>> = (0..limits.instances)
        .into_par_iter()
        .map(|idx| {
            let mut rng = RngStream::new(replication_seed(seed, idx as u64));
            let (p, u, fs) = random_instance(limits, &mut rng);
            let mut out = Vec::new();
            for kind in ObjectiveKind::ALL {
                let e = solve(kind, &u, &fs, &p, &SolveOptions::default())?.objective;
                let b = brute_force(kind, &u, &fs, &p)?.objective;
                if !(e == b || (e - b).abs() <= ORACLE_TOLERANCE) {
                    out.push(OracleMismatch {
                        instance: idx,
                        objective: kind,
                        exact: e,
                        brute_force: b,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_, HarnessError>>()?;
    Ok(OracleReport {
        instances: limits.instances,
        comparisons: limits.instances * ObjectiveKind::ALL.len(),
        mismatches: per_instance.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_size_limits() {
        let l: OracleLimits = "2x3x4".parse().unwrap();
        assert_eq!((l.max_sus, l.max_freqs, l.max_slots), (2, 3, 4));
        assert!("2x3".parse::<OracleLimits>().is_err());
        assert!("0x3x3".parse::<OracleLimits>().is_err());
    }

    #[test]
    fn small_run_agrees() {
        let limits = OracleLimits {
            instances: 10,
            ..OracleLimits::default()
        };
        let r = oracle_check(&limits, 3).unwrap();
        assert!(r.passed(), "{r}");
        assert_eq!(r.comparisons, 40);
    }

    #[test]
    fn refuses_limits_beyond_brute_force() {
        let limits: OracleLimits = "6x4x4".parse().unwrap();
        assert!(oracle_check(&limits, 1).is_err());
    }
}
