//! Throughput maximisation as an integer min-cost flow over slot counts.
//!
//! Network: source -> SU -> frequency -> sink. Each SU has a unit arc with a
//! large negative cost that forces coverage, plus a zero-cost arc for the
//! rest of its `a_i * T` pairs. SU -> frequency arcs carry `-U_if` per slot
//! and frequencies hold at most `T` slots. Successive shortest paths stop as
//! soon as no augmenting path has negative cost.

use super::{row_caps, Counts};
use crate::channel::RateMatrix;
use crate::params::SimParams;

struct Arc {
    to: usize,
    cap: i64,
    cost: i64,
}

struct Network {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
}

impl Network {
    fn new(nodes: usize) -> Self {
        Self {
            arcs: Vec::new(),
            out: vec![Vec::new(); nodes],
        }
    }

    /// Adds an arc and its residual twin; returns the forward arc id.
    fn add(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap, cost });
        self.arcs.push(Arc {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.out[from].push(id);
        self.out[to].push(id + 1);
        id
    }

    /// Bellman-Ford (queue based) shortest path; returns the arc used to
    /// reach each node.
    fn shortest_path(&self, s: usize) -> (Vec<i64>, Vec<Option<usize>>) {
        let n = self.out.len();
        let mut dist = vec![i64::MAX; n];
        let mut via = vec![None; n];
        let mut queued = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        dist[s] = 0;
        queue.push_back(s);
        queued[s] = true;
        while let Some(v) = queue.pop_front() {
            queued[v] = false;
            for &a in &self.out[v] {
                let arc = &self.arcs[a];
                if arc.cap > 0 && dist[v] + arc.cost < dist[arc.to] {
                    dist[arc.to] = dist[v] + arc.cost;
                    via[arc.to] = Some(a);
                    if !queued[arc.to] {
                        queued[arc.to] = true;
                        queue.push_back(arc.to);
                    }
                }
            }
        }
        (dist, via)
    }
}

/// Slot counts of a throughput-maximising schedule that covers every SU.
pub(crate) fn max_throughput_counts(u: &RateMatrix, p: &SimParams) -> Counts {
    let (n, nf) = (u.n_sus(), u.n_freqs());
    let nt = p.slots_per_period as i64;
    let big = u.max_entry() as i64 * (nf as i64) * nt + 1;
    let caps = row_caps(p);
    let (src, sink) = (0, n + nf + 1);
    let mut net = Network::new(n + nf + 2);
    for (i, &cap) in caps.iter().enumerate() {
        net.add(src, 1 + i, 1, -big);
        net.add(src, 1 + i, cap as i64 - 1, 0);
    }
    let mut pair_arcs = vec![0; n * nf];
    for i in 0..n {
        for f in 0..nf {
            pair_arcs[i * nf + f] = net.add(1 + i, 1 + n + f, nt, -(u.get(i, f) as i64));
        }
    }
    for f in 0..nf {
        net.add(1 + n + f, sink, nt, 0);
    }

    loop {
        let (dist, via) = net.shortest_path(src);
        if dist[sink] == i64::MAX || dist[sink] >= 0 {
            break;
        }
        let mut push = i64::MAX;
        let mut v = sink;
        while let Some(a) = via[v] {
            push = push.min(net.arcs[a].cap);
            v = net.arcs[a ^ 1].to;
        }
        let mut v = sink;
        while let Some(a) = via[v] {
            net.arcs[a].cap -= push;
            net.arcs[a ^ 1].cap += push;
            v = net.arcs[a ^ 1].to;
        }
    }

    pair_arcs
        .iter()
        .map(|&a| net.arcs[a ^ 1].cap as u32)
        .collect()
}
