//! Deterministic choice among equally good schedules.
//!
//! Starting from an optimal schedule, assignments are dropped, handed to a
//! later SU, or moved to a later free pair whenever the objective does not
//! get worse. Each step makes `X` (row-major over `(i, f, t)`)
//! lexicographically smaller, so the descent terminates; the result is a
//! local lexicographic minimum over those steps.

use crate::channel::RateMatrix;
use crate::exact::objective::{Objective, ObjectiveKind};
use crate::params::SimParams;
use crate::schedule::Schedule;

/// Comparison key: proportional fairness ranks by fewest zero terms, then
/// by the log sum of the positive ones.
fn key(obj: &Objective, packets: &[u64]) -> (i64, f64) {
    match obj.kind() {
        ObjectiveKind::PropFair => {
            let mut zeros = 0;
            let mut sum = 0.0;
            for v in obj.su_values(packets) {
                if v > 0.0 {
                    sum += v.ln();
                } else {
                    zeros += 1;
                }
            }
            (-zeros, sum)
        }
        _ => (0, obj.value(packets)),
    }
}

fn not_worse(a: (i64, f64), b: (i64, f64)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 >= b.1)
}

pub(crate) fn canonicalize(sched: &mut Schedule, u: &RateMatrix, obj: &Objective, p: &SimParams) {
    let n = sched.n_sus();
    let nf = sched.n_freqs();
    let nt = sched.n_slots();
    let mut packets = sched.packets(u);
    let mut pairs: Vec<usize> = vec![0; n];
    let mut used = vec![vec![0usize; n]; nt];
    for (i, _, t) in sched.triples() {
        pairs[i] += 1;
        used[t][i] += 1;
    }
    let mut cur = key(obj, &packets);
    let try_change = |packets: &mut Vec<u64>, changes: &[(usize, i64)], cur: &mut (i64, f64)| {
        for &(i, d) in changes {
            packets[i] = packets[i].wrapping_add_signed(d);
        }
        let k = key(obj, packets);
        if not_worse(k, *cur) {
            *cur = k;
            true
        } else {
            for &(i, d) in changes {
                packets[i] = packets[i].wrapping_add_signed(-d);
            }
            false
        }
    };
    loop {
        let mut changed = false;
        for i in 0..n {
            for f in 0..nf {
                for t in 0..nt {
                    if !sched.get(i, f, t) {
                        continue;
                    }
                    let r = u.get(i, f) as i64;
                    if pairs[i] > 1 && try_change(&mut packets, &[(i, -r)], &mut cur) {
                        sched.set(i, f, t, false);
                        pairs[i] -= 1;
                        used[t][i] -= 1;
                        changed = true;
                        continue;
                    }
                    if pairs[i] > 1 {
                        let to = (i + 1..n).rev().find(|&j| {
                            used[t][j] < p.antennas[j]
                                && try_change(&mut packets, &[(i, -r), (j, u.get(j, f) as i64)], &mut cur)
                        });
                        if let Some(j) = to {
                            sched.set(i, f, t, false);
                            sched.set(j, f, t, true);
                            pairs[i] -= 1;
                            pairs[j] += 1;
                            used[t][i] -= 1;
                            used[t][j] += 1;
                            changed = true;
                            continue;
                        }
                    }
                    let here = f * nt + t;
                    let dest = (here + 1..nf * nt).rev().find(|&k| {
                        let (f2, t2) = (k / nt, k % nt);
                        sched.holder(f2, t2).is_none()
                            && (t2 == t || used[t2][i] < p.antennas[i])
                            && try_change(&mut packets, &[(i, u.get(i, f2) as i64 - r)], &mut cur)
                    });
                    if let Some(k) = dest {
                        let (f2, t2) = (k / nt, k % nt);
                        sched.set(i, f, t, false);
                        sched.set(i, f2, t2, true);
                        used[t][i] -= 1;
                        used[t2][i] += 1;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    sched.refresh_throughput(u);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::FairnessState;

    fn tiny(n: usize, f: usize, t: usize, a: usize) -> SimParams {
        let mut p = SimParams::middle(n);
        p.n_freqs = f;
        p.slots_per_period = t;
        p.antennas = vec![a; n];
        p
    }

    #[test]
    fn maxmin_drops_surplus_pairs() {
        let u = RateMatrix::from_rows(&[vec![4, 4, 4], vec![1, 1, 1]]);
        let p = tiny(2, 3, 1, 3);
        let obj = Objective::new(ObjectiveKind::MaxMin, &FairnessState::new(2), &p);
        let mut s = Schedule::from_triples(&u, 1, [(0, 0, 0), (0, 1, 0), (1, 2, 0)]);
        let before = obj.value(&s.packets(&u));
        canonicalize(&mut s, &u, &obj, &p);
        assert_eq!(obj.value(&s.packets(&u)), before);
        assert_eq!(s.packets(&u), vec![4, 1]);
        assert!(s.get(0, 1, 0));
        assert_eq!(s.check(&u, &p.antennas), Ok(()));
        let again = {
            let mut c = s.clone();
            canonicalize(&mut c, &u, &obj, &p);
            c
        };
        assert_eq!(again, s);
    }

    #[test]
    fn thrmax_keeps_total() {
        let u = RateMatrix::from_rows(&[vec![3, 3], vec![3, 3]]);
        let p = tiny(2, 2, 2, 2);
        let obj = Objective::new(ObjectiveKind::ThroughputMax, &FairnessState::new(2), &p);
        let mut s = Schedule::from_triples(&u, 2, [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 1, 1)]);
        canonicalize(&mut s, &u, &obj, &p);
        assert_eq!(s.packets(&u).iter().sum::<u64>(), 12);
        // Everything but the pair SU 0 needs for coverage goes to SU 1.
        assert_eq!(s.packets(&u), vec![3, 9]);
        assert!(s.get(0, 1, 0));
    }

    #[test]
    fn propfair_never_trades_a_positive_term_for_zero() {
        let u = RateMatrix::from_rows(&[vec![0, 5], vec![2, 0]]);
        let p = tiny(2, 2, 1, 1);
        let obj = Objective::new(ObjectiveKind::PropFair, &FairnessState::new(2), &p);
        let mut s = Schedule::from_triples(&u, 1, [(0, 1, 0), (1, 0, 0)]);
        canonicalize(&mut s, &u, &obj, &p);
        assert_eq!(s.packets(&u), vec![5, 2]);
    }
}
