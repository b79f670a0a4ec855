//! Turns per-(SU, frequency) slot counts into a slot-level schedule.
//!
//! SU `i` is split into `min(a_i, F)` sub-nodes of degree at most `T`, which
//! gives a bipartite multigraph of maximum degree `T` against the
//! frequencies. A proper `T`-edge-colouring (alternating-path recolouring)
//! then assigns every (SU, frequency) unit a slot: no frequency repeats a
//! slot and no SU uses more than `a_i` frequencies in one slot.

use super::row_caps;
use crate::channel::RateMatrix;
use crate::params::SimParams;
use crate::schedule::Schedule;

/// Builds a schedule realising `counts`.
///
/// # Panics
/// If `counts` break a column cap of `T` or a row cap of `a_i * T`.
pub fn counts_to_schedule(counts: &[u32], u: &RateMatrix, p: &SimParams) -> Schedule {
    let (n, nf, nt) = (u.n_sus(), u.n_freqs(), p.slots_per_period);
    assert_eq!(counts.len(), n * nf, "count matrix shape");
    let caps = row_caps(p);

    // (left node, frequency, su) per unit edge.
    let mut edges: Vec<(usize, usize, usize)> = Vec::new();
    let mut left = 0;
    for i in 0..n {
        let row: u32 = counts[i * nf..(i + 1) * nf].iter().sum();
        assert!(row <= caps[i], "SU {i} holds {row} pairs, cap {}", caps[i]);
        let mut k = 0;
        for f in 0..nf {
            for _ in 0..counts[i * nf + f] {
                edges.push((left + k / nt, f, i));
                k += 1;
            }
        }
        left += k.div_ceil(nt);
    }
    for f in 0..nf {
        let col: u32 = (0..n).map(|i| counts[i * nf + f]).sum();
        assert!(col as usize <= nt, "frequency {f} holds {col} slots");
    }

    let right = |f: usize| left + f;
    let nodes = left + nf;
    let mut at: Vec<Vec<Option<usize>>> = vec![vec![None; nt]; nodes];
    let mut colour = vec![usize::MAX; edges.len()];
    let ends = |e: usize| (edges[e].0, right(edges[e].1));

    for e in 0..edges.len() {
        let (x, y) = ends(e);
        let alpha = free_colour(&at[x]);
        if at[y][alpha].is_some() {
            let beta = free_colour(&at[y]);
            // Walk the alpha/beta path from y and swap its colours; x is on
            // the other side of the bipartition so the path never reaches it.
            let mut path = Vec::new();
            let (mut node, mut c) = (y, alpha);
            while let Some(e2) = at[node][c] {
                path.push(e2);
                let (a, b) = ends(e2);
                node = if a == node { b } else { a };
                c = if c == alpha { beta } else { alpha };
            }
            for &e2 in &path {
                let (a, b) = ends(e2);
                at[a][colour[e2]] = None;
                at[b][colour[e2]] = None;
            }
            for &e2 in &path {
                let (a, b) = ends(e2);
                colour[e2] = if colour[e2] == alpha { beta } else { alpha };
                at[a][colour[e2]] = Some(e2);
                at[b][colour[e2]] = Some(e2);
            }
        }
        colour[e] = alpha;
        at[x][alpha] = Some(e);
        at[y][alpha] = Some(e);
    }

    Schedule::from_triples(
        u,
        nt,
        edges.iter().zip(&colour).map(|(&(_, f, i), &t)| (i, f, t)),
    )
}

fn free_colour(slots: &[Option<usize>]) -> usize {
    slots
        .iter()
        .position(Option::is_none)
        .expect("node degree exceeds the slot count")
}
