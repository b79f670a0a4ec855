//! FAIRSCH: greedy pair-by-pair assignment for the fair objectives.
//!
//! Frequencies are visited in the outer loop and slots in the inner loop.
//! Each `(f, t)` goes to the SU with an idle antenna in slot `t` that looks
//! worst off (max-min modes) or that maximises the product of throughputs
//! (proportional fairness). Ties go to the SU with the fewest pairs so far,
//! then to the lowest index.

use serde::{Deserialize, Serialize};

use crate::channel::RateMatrix;
use crate::params::SimParams;
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeuristicMode {
    MaxMin,
    WeightedMaxMin,
    PropFair,
}

/// Runs FAIRSCH on one period's rates.
///
/// The accumulated throughput of each SU is tracked as an integer packet
/// count, so max-min comparisons are exact and the weighted mode with equal
/// weights reproduces the unweighted mode bit for bit.
pub fn fairsch(u: &RateMatrix, p: &SimParams, mode: HeuristicMode) -> Schedule {
    let n = u.n_sus();
    let nf = u.n_freqs();
    let nt = p.slots_per_period;
    let slots = nt as f64;

    let mut packets = vec![0u64; n];
    let mut picks = vec![0usize; n];
    // Antennas still idle per (slot, SU).
    let mut idle: Vec<Vec<usize>> = vec![p.antennas.clone(); nt];
    let mut sched = Schedule::empty(n, nf, nt);

    for f in 0..nf {
        for t in 0..nt {
            let avail = (0..n).filter(|&i| idle[t][i] > 0);
            let chosen = match mode {
                HeuristicMode::MaxMin => argmin_by(avail, |i| (packets[i] as f64, picks[i])),
                HeuristicMode::WeightedMaxMin => {
                    argmin_by(avail, |i| (packets[i] as f64 / p.weights[i], picks[i]))
                }
                HeuristicMode::PropFair => {
                    let omega: Vec<f64> = packets.iter().map(|&k| k as f64 / slots).collect();
                    let log_omega: Vec<f64> = omega.iter().map(|w| w.ln()).collect();
                    let log_all: f64 = log_omega.iter().sum();
                    let zeros = omega.iter().filter(|&&w| w == 0.0).count();
                    let score = |i: usize| {
                        // ln[(omega_i + U_if) * prod_{j != i} omega_j]
                        let others_zero = zeros - usize::from(omega[i] == 0.0);
                        if others_zero > 0 {
                            f64::NEG_INFINITY
                        } else {
                            let rest = if omega[i] == 0.0 {
                                log_omega
                                    .iter()
                                    .enumerate()
                                    .filter(|&(j, _)| j != i)
                                    .map(|(_, l)| l)
                                    .sum()
                            } else {
                                log_all - log_omega[i]
                            };
                            (omega[i] + u.get(i, f) as f64).ln() + rest
                        }
                    };
                    let mut best: Option<(usize, f64)> = None;
                    for i in avail {
                        let s = score(i);
                        let better = match best {
                            None => true,
                            Some((b, bs)) => s > bs || (s == bs && picks[i] < picks[b]),
                        };
                        if better {
                            best = Some((i, s));
                        }
                    }
                    best.map(|(i, _)| i)
                }
            };
            // No SU has an idle antenna in this slot: leave the pair unused.
            let Some(i) = chosen else { continue };
            sched.set(i, f, t, true);
            packets[i] += u.get(i, f) as u64;
            picks[i] += 1;
            idle[t][i] -= 1;
        }
    }
    sched.refresh_throughput(u);
    sched
}

fn argmin_by(candidates: impl Iterator<Item = usize>, key: impl Fn(usize) -> (f64, usize)) -> Option<usize> {
    let mut best: Option<(usize, (f64, usize))> = None;
    for i in candidates {
        let k = key(i);
        if best.is_none_or(|(_, bk)| k < bk) {
            best = Some((i, k));
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(n: usize, f: usize, t: usize, a: usize) -> SimParams {
        let mut p = SimParams::middle(n);
        p.n_freqs = f;
        p.slots_per_period = t;
        p.antennas = vec![a; n];
        p
    }

    #[test]
    fn maxmin_trace_on_two_by_two() {
        let u = RateMatrix::from_rows(&[vec![5, 3], vec![4, 2]]);
        let p = tiny(2, 2, 1, 1);
        let s = fairsch(&u, &p, HeuristicMode::MaxMin);
        assert!(s.get(0, 0, 0) && s.get(1, 1, 0));
        assert_eq!(s.per_su_throughput, vec![5.0, 2.0]);
    }

    #[test]
    fn propfair_cold_start_trace() {
        let u = RateMatrix::from_rows(&[vec![5, 3], vec![4, 2]]);
        let p = tiny(2, 2, 1, 1);
        let s = fairsch(&u, &p, HeuristicMode::PropFair);
        assert_eq!(s.per_su_throughput, vec![5.0, 2.0]);
        let product: f64 = s.per_su_throughput.iter().product();
        assert_eq!(product, 10.0);
    }

    #[test]
    fn equal_weights_match_unweighted() {
        let u = RateMatrix::from_rows(&[vec![5, 3], vec![4, 2]]);
        let mut p = tiny(2, 2, 1, 1);
        p.weights = vec![0.5, 0.5];
        assert_eq!(
            fairsch(&u, &p, HeuristicMode::WeightedMaxMin),
            fairsch(&u, &p, HeuristicMode::MaxMin)
        );
    }

    #[test]
    fn exhausted_slot_leaves_pairs_empty() {
        // One SU with one antenna and three frequencies: two pairs per slot stay idle.
        let u = RateMatrix::from_rows(&[vec![1, 2, 3]]);
        let p = tiny(1, 3, 2, 1);
        let s = fairsch(&u, &p, HeuristicMode::MaxMin);
        assert_eq!(s.triples().count(), 2);
        assert_eq!(s.check(&u, &p.antennas), Ok(()));
    }

    #[test]
    fn weights_steer_assignment() {
        let u = RateMatrix::from_rows(&[vec![4; 4], vec![4; 4]]);
        let mut p = tiny(2, 4, 5, 4);
        p.weights = vec![0.2, 0.8];
        let s = fairsch(&u, &p, HeuristicMode::WeightedMaxMin);
        assert!(s.per_su_throughput[1] > 2.0 * s.per_su_throughput[0]);
    }
}
