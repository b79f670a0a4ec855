//! LP-based branch and bound over slot counts for the fair objectives.
//!
//! Variables are the counts `c_if` of slots in which SU `i` uses frequency
//! `f`. Max-min objectives carry an auxiliary `z` below every SU value;
//! proportional fairness carries one `w_i` per SU bounded by tangent cuts of
//! `ln v_i`, added lazily. Once an incumbent exists, max-min nodes also
//! require every SU to strictly beat it, which usually empties the LP fast.

use std::rc::Rc;

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome, Solution, Variable};

use super::{row_caps, Counts, Objective, ObjectiveKind, SolveError, SolveOptions};
use crate::channel::RateMatrix;
use crate::heuristic::fairsch;
use crate::params::SimParams;

const INT_TOL: f64 = 1e-6;
const CUT_TOL: f64 = 1e-9;
const ROOT_CUT_ROUNDS: usize = 40;
const NODE_CUT_ROUNDS: usize = 6;
const INITIAL_TANGENTS: usize = 6;
const RENS_EVERY: u64 = 16;
const RENS_NODES: u64 = 50_000;
const SUB_SEARCH_EVERY: u64 = 2048;
const SUB_SEARCH_NODES: u64 = 1_000;

struct Model<'a> {
    obj: &'a Objective,
    u: &'a RateMatrix,
    n: usize,
    nf: usize,
    /// Slots available per column (a column merges identical frequencies).
    col_cap: Vec<u32>,
    caps: Vec<u32>,
    c: Vec<Variable>,
    /// `z` for max-min, `w_i` for proportional fairness.
    aux: Vec<Variable>,
    zero_penalty: f64,
}

struct Pending {
    parent: Rc<Solution>,
    parent_bound: f64,
    branch: (usize, ComparisonOp, f64),
    needs: Rc<Vec<u64>>,
}

/// Groups frequencies whose rate columns are identical. Returns the class of
/// each frequency and the number of classes.
fn column_classes(u: &RateMatrix) -> (Vec<usize>, usize) {
    let col = |f: usize| (0..u.n_sus()).map(move |i| u.get(i, f));
    let mut reps: Vec<usize> = Vec::new();
    let mut class = Vec::with_capacity(u.n_freqs());
    for f in 0..u.n_freqs() {
        match reps.iter().position(|&g| col(g).eq(col(f))) {
            Some(k) => class.push(k),
            None => {
                class.push(reps.len());
                reps.push(f);
            }
        }
    }
    (class, reps.len())
}

pub(crate) fn solve(
    obj: &Objective,
    u_full: &RateMatrix,
    p: &SimParams,
    opts: &SolveOptions,
) -> Result<(Counts, u64, bool), SolveError> {
    let n = u_full.n_sus();
    let nt = p.slots_per_period as u32;
    // Frequencies with identical columns are interchangeable in count space:
    // search over merged columns and split the counts back afterwards.
    let (class, nf) = column_classes(u_full);
    let mut u = RateMatrix::zeros(n, nf);
    let mut col_cap = vec![0u32; nf];
    for (f, &k) in class.iter().enumerate() {
        col_cap[k] += nt;
        for i in 0..n {
            u.set(i, k, u_full.get(i, f));
        }
    }
    let inst = Instance {
        obj,
        u: &u,
        u_full,
        col_cap,
        p,
    };
    let fair_mode = obj.kind().heuristic_mode().expect("fair objective");
    let h = fairsch(u_full, p, fair_mode);
    let mut h_counts: Counts = vec![0; n * nf];
    for (i, f, _) in h.triples() {
        h_counts[i * nf + class[f]] += 1;
    }
    let (counts, nodes, clean) = run(&inst, opts.node_budget, None, vec![h_counts], true)?;
    let counts = counts.ok_or_else(|| SolveError::Lp("search ended without a schedule".into()))?;
    let mut full = vec![0u32; n * u_full.n_freqs()];
    for k in 0..nf {
        let members: Vec<usize> = (0..class.len()).filter(|&f| class[f] == k).collect();
        let (mut slot, mut used) = (0, 0u32);
        for i in 0..n {
            let mut left = counts[i * nf + k];
            while left > 0 {
                let take = left.min(nt - used);
                full[i * u_full.n_freqs() + members[slot]] += take;
                left -= take;
                used += take;
                if used == nt {
                    slot += 1;
                    used = 0;
                }
            }
        }
    }
    Ok((full, nodes, clean))
}

struct Instance<'a> {
    obj: &'a Objective,
    /// Rates with identical frequency columns merged.
    u: &'a RateMatrix,
    u_full: &'a RateMatrix,
    col_cap: Vec<u32>,
    p: &'a SimParams,
}

/// Branch and bound on the merged instance. With `support`, counts outside
/// it are fixed at zero (used for sub-searches around an LP point). Returns
/// the best schedule found, including the seeds.
fn run(
    inst: &Instance,
    budget: u64,
    support: Option<&[bool]>,
    seeds: Vec<Counts>,
    sub_search: bool,
) -> Result<(Option<Counts>, u64, bool), SolveError> {
    let (obj, u, u_full, p) = (inst.obj, inst.u, inst.u_full, inst.p);
    let col_cap = inst.col_cap.clone();
    let n = u.n_sus();
    let nf = u.n_freqs();
    let caps = row_caps(p);
    let nt = p.slots_per_period as u32;
    let is_pf = obj.kind() == ObjectiveKind::PropFair;

    let max_packets: Vec<u64> = (0..n)
        .map(|i| {
            let mut row = u_full.row(i).to_vec();
            row.sort_unstable_by(|a, b| b.cmp(a));
            let a = (caps[i] / nt.max(1)) as usize;
            row.iter().take(a).map(|&x| x as u64 * nt as u64).sum()
        })
        .collect();
    let zero_penalty = if is_pf {
        propfair_penalty(obj, &max_packets)
    } else {
        0.0
    };

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let c: Vec<Variable> = (0..n * nf)
        .map(|k| {
            let open = support.is_none_or(|s| s[k]);
            lp.add_var(0.0, (0.0, if open { col_cap[k % nf] as f64 } else { 0.0 }))
        })
        .collect();
    let mut aux = Vec::new();
    let terms = obj.terms();
    if is_pf {
        for i in 0..n {
            let t = terms[i];
            let vmax = t.value(max_packets[i]);
            if vmax <= 0.0 {
                aux.push(lp.add_var(1.0, (zero_penalty, zero_penalty)));
                continue;
            }
            let w = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
            aux.push(w);
            let vmin = if t.offset > 0.0 { t.offset } else { t.scale };
            let vmin = vmin.min(vmax);
            for g in 0..INITIAL_TANGENTS {
                let frac = g as f64 / (INITIAL_TANGENTS - 1) as f64;
                let at = vmin * (vmax / vmin).powf(frac);
                let (expr, rhs) = tangent(i, at, w, &c, u, nf, t.offset, t.scale);
                lp.add_constraint(expr, ComparisonOp::Le, rhs);
            }
            if t.offset <= 0.0 && u.row(i).contains(&0) {
                // w_i <= L + (ln vmax - L) * (pairs on positive-rate frequencies)
                let slope = vmax.ln() - zero_penalty;
                let mut expr = vec![(w, 1.0)];
                expr.extend((0..nf).filter(|&f| u.get(i, f) > 0).map(|f| (c[i * nf + f], -slope)));
                lp.add_constraint(expr, ComparisonOp::Le, zero_penalty);
            }
        }
    } else {
        let z = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
        aux.push(z);
        for (i, t) in terms.iter().enumerate() {
            let mut expr = vec![(z, 1.0)];
            expr.extend(
                (0..nf)
                    .filter(|&f| u.get(i, f) > 0)
                    .map(|f| (c[i * nf + f], -t.scale * u.get(i, f) as f64)),
            );
            lp.add_constraint(expr, ComparisonOp::Le, t.offset);
        }
    }
    for f in 0..nf {
        lp.add_constraint(
            (0..n).map(|i| (c[i * nf + f], 1.0)).collect::<Vec<_>>(),
            ComparisonOp::Le,
            col_cap[f] as f64,
        );
    }
    for i in 0..n {
        let row: Vec<_> = (0..nf).map(|f| (c[i * nf + f], 1.0)).collect();
        lp.add_constraint(row.clone(), ComparisonOp::Le, caps[i] as f64);
        lp.add_constraint(row, ComparisonOp::Ge, 1.0);
    }

    let model = Model {
        obj,
        u,
        n,
        nf,
        col_cap,
        caps,
        c,
        aux,
        zero_penalty,
    };

    let mut search = Search {
        model: &model,
        best: None,
        needs: Rc::new(vec![0; n]),
        nodes: 0,
        sub_nodes: 0,
        clean: true,
    };
    for seed in seeds {
        if model.feasible(&seed) {
            search.offer(seed);
        }
    }
    if support.is_none() {
        if let Some(g) = model.complete(vec![0; n * nf]) {
            search.offer(g);
        }
    }

    let root = match lp.solve() {
        Ok(SolveOutcome::Solution(s)) => s,
        Ok(SolveOutcome::Interrupted(_)) => return Err(SolveError::Lp("root interrupted".into())),
        Err(microlp::Error::Infeasible) if support.is_some() => return Ok((None, 0, true)),
        Err(microlp::Error::Infeasible) => {
            return Err(SolveError::Infeasible {
                n_sus: n,
                pairs: p.pairs(),
            })
        }
        Err(e) => return Err(SolveError::Lp(e.to_string())),
    };
    let mut stack: Vec<Pending> = Vec::new();
    let sub_budget = SUB_SEARCH_NODES.min(budget / 4);
    if let Some(root) = search.process(root, Rc::new(vec![0; n]), ROOT_CUT_ROUNDS) {
        if sub_search && sub_budget > 0 {
            search.sub_search(inst, &root.0, sub_budget);
        }
        search.branch(root, &mut stack);
    }
    while let Some(node) = stack.pop() {
        if search.nodes >= budget {
            search.clean = false;
            break;
        }
        if !search.improves(node.parent_bound) {
            continue;
        }
        let parent = Rc::try_unwrap(node.parent).unwrap_or_else(|rc| (*rc).clone());
        let (k, op, rhs) = node.branch;
        let Some(sol) = search.lp_step(parent.add_constraint([(model.c[k], 1.0)], op, rhs)) else {
            continue;
        };
        if let Some(open) = search.process(sol, node.needs, NODE_CUT_ROUNDS) {
            if sub_search && sub_budget > 0 && search.nodes % SUB_SEARCH_EVERY == 0 {
                search.sub_search(inst, &open.0, sub_budget);
            }
            search.branch(open, &mut stack);
        }
    }

    Ok((search.best.map(|b| b.0), search.nodes, search.clean))
}

/// Tangent of `ln v_i` at `at`, as `w_i - (scale / at) * sum_f U_if c_if <= rhs`.
#[allow(clippy::too_many_arguments)]
fn tangent(
    i: usize,
    at: f64,
    w: Variable,
    c: &[Variable],
    u: &RateMatrix,
    nf: usize,
    offset: f64,
    scale: f64,
) -> (Vec<(Variable, f64)>, f64) {
    let mut expr = vec![(w, 1.0)];
    expr.extend(
        (0..nf)
            .filter(|&f| u.get(i, f) > 0)
            .map(|f| (c[i * nf + f], -scale * u.get(i, f) as f64 / at)),
    );
    (expr, at.ln() - 1.0 + offset / at)
}

/// Finite stand-in for `ln 0`: low enough that one zero term outweighs any
/// gain on the other SUs.
fn propfair_penalty(obj: &Objective, max_packets: &[u64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (t, &mp) in obj.terms().iter().zip(max_packets) {
        let small = if t.offset > 0.0 { t.offset } else { t.scale };
        lo = lo.min(small.ln());
        let top = t.value(mp);
        if top > 0.0 {
            hi = hi.max(top.ln());
        }
    }
    if !hi.is_finite() {
        hi = lo;
    }
    lo - obj.terms().len() as f64 * (hi - lo).max(0.0) - 1.0
}

impl Model<'_> {
    fn packets(&self, counts: &[u32]) -> Vec<u64> {
        (0..self.n)
            .map(|i| {
                (0..self.nf)
                    .map(|f| counts[i * self.nf + f] as u64 * self.u.get(i, f) as u64)
                    .sum()
            })
            .collect()
    }

    fn score(&self, counts: &[u32]) -> f64 {
        self.obj.score(&self.packets(counts), self.zero_penalty)
    }

    fn feasible(&self, counts: &[u32]) -> bool {
        let (n, nf) = (self.n, self.nf);
        (0..nf).all(|f| (0..n).map(|i| counts[i * nf + f]).sum::<u32>() <= self.col_cap[f])
            && (0..n).all(|i| {
                let row: u32 = counts[i * nf..(i + 1) * nf].iter().sum();
                row >= 1 && row <= self.caps[i]
            })
    }

    /// Rounds an LP point down, then hands each column's spare slots to the
    /// SUs with the largest fractional parts.
    fn round_lp(&self, values: &[f64]) -> Counts {
        let (n, nf) = (self.n, self.nf);
        let mut counts: Counts = values.iter().map(|x| (x + INT_TOL).floor() as u32).collect();
        let mut row: Vec<u32> = (0..n).map(|i| counts[i * nf..(i + 1) * nf].iter().sum()).collect();
        for f in 0..nf {
            let mut spare = self.col_cap[f].saturating_sub((0..n).map(|i| counts[i * nf + f]).sum());
            let frac: Vec<f64> = (0..n).map(|i| values[i * nf + f] - counts[i * nf + f] as f64).collect();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]));
            for i in order {
                if spare == 0 || frac[i] <= INT_TOL {
                    break;
                }
                if row[i] < self.caps[i] {
                    counts[i * nf + f] += 1;
                    row[i] += 1;
                    spare -= 1;
                }
            }
        }
        counts
    }

    /// Searches the box of floor/ceiling roundings around an LP point for the
    /// best complete schedule scoring above `floor`.
    fn rens(&self, values: &[f64], floor: Option<f64>) -> Option<Counts> {
        let nf = self.nf;
        let mut counts: Counts = values.iter().map(|x| (x + INT_TOL).floor() as u32).collect();
        let free: Vec<usize> = (0..values.len())
            .filter(|&k| values[k] - counts[k] as f64 > INT_TOL)
            .collect();
        let col: Vec<u32> = (0..nf).map(|f| (0..self.n).map(|i| counts[i * nf + f]).sum()).collect();
        let row: Vec<u32> = (0..self.n).map(|i| counts[i * nf..(i + 1) * nf].iter().sum()).collect();
        if col.iter().zip(&self.col_cap).any(|(c, cap)| c > cap) || (0..self.n).any(|i| row[i] > self.caps[i]) {
            return None;
        }
        let packets = self.packets(&counts);
        // Packets each SU could still gain from undecided roundings.
        let mut upside = vec![0u64; self.n];
        for &k in &free {
            upside[k / nf] += self.u.get(k / nf, k % nf) as u64;
        }
        let mut st = RensState {
            model: self,
            free,
            counts: counts.clone(),
            col,
            row,
            packets,
            upside,
            best: floor.unwrap_or(f64::NEG_INFINITY),
            found: None,
            budget: RENS_NODES,
        };
        st.dfs(0);
        counts = st.found?;
        Some(counts)
    }

    /// Greedy completion of a partial count matrix: cover every SU, then keep
    /// handing out the most useful remaining pair.
    fn complete(&self, mut counts: Counts) -> Option<Counts> {
        let (n, nf) = (self.n, self.nf);
        let mut col: Vec<u32> = (0..nf).map(|f| (0..n).map(|i| counts[i * nf + f]).sum()).collect();
        let mut row: Vec<u32> = (0..n).map(|i| counts[i * nf..(i + 1) * nf].iter().sum()).collect();
        if col.iter().zip(&self.col_cap).any(|(x, cap)| x > cap) || (0..n).any(|i| row[i] > self.caps[i]) {
            return None;
        }
        for i in 0..n {
            if row[i] > 0 {
                continue;
            }
            let f = (0..nf)
                .filter(|&f| col[f] < self.col_cap[f])
                .max_by(|&a, &b| self.u.get(i, a).cmp(&self.u.get(i, b)).then(b.cmp(&a)))?;
            counts[i * nf + f] += 1;
            col[f] += 1;
            row[i] += 1;
        }
        let terms = self.obj.terms();
        let mut packets = self.packets(&counts);
        loop {
            let mut pick: Option<(usize, usize, f64)> = None;
            for i in 0..n {
                if row[i] >= self.caps[i] {
                    continue;
                }
                let Some(f) = (0..nf)
                    .filter(|&f| col[f] < self.col_cap[f] && self.u.get(i, f) > 0)
                    .max_by(|&a, &b| self.u.get(i, a).cmp(&self.u.get(i, b)).then(b.cmp(&a)))
                else {
                    continue;
                };
                let v = terms[i].value(packets[i]);
                let key = match self.obj.kind() {
                    ObjectiveKind::PropFair => {
                        let after = terms[i].value(packets[i] + self.u.get(i, f) as u64);
                        if v > 0.0 {
                            after.ln() - v.ln()
                        } else {
                            f64::MAX / 2.0 + after
                        }
                    }
                    _ => -v,
                };
                if pick.is_none_or(|(_, _, k)| key > k) {
                    pick = Some((i, f, key));
                }
            }
            let Some((i, f, _)) = pick else { break };
            counts[i * nf + f] += 1;
            col[f] += 1;
            row[i] += 1;
            packets[i] += self.u.get(i, f) as u64;
        }
        Some(counts)
    }
}

impl Model<'_> {
    /// Local search on a feasible count matrix: moves single pairs between
    /// SUs (and swaps pairs when the receiver is at its antenna cap) while
    /// the objective improves.
    fn polish(&self, counts: &mut Counts) {
        match self.obj.kind() {
            ObjectiveKind::PropFair => self.polish_log_sum(counts),
            _ => self.polish_min(counts),
        }
    }

    fn polish_min(&self, counts: &mut Counts) {
        let (n, nf) = (self.n, self.nf);
        let terms = self.obj.terms();
        let mut packets = self.packets(counts);
        let mut row: Vec<u32> = (0..n).map(|i| counts[i * nf..(i + 1) * nf].iter().sum()).collect();
        let mut col: Vec<u32> = (0..nf).map(|f| (0..n).map(|i| counts[i * nf + f]).sum()).collect();
        let val = |i: usize, k: u64| terms[i].value(k);
        loop {
            let Some(i) = (0..n).min_by(|&a, &b| val(a, packets[a]).total_cmp(&val(b, packets[b]))) else {
                return;
            };
            let cur = val(i, packets[i]);
            // (gain for i, donor j, freq f taken, freq g given back)
            let mut best: Option<(u64, usize, usize, Option<usize>)> = None;
            for f in 0..nf {
                let uf = self.u.get(i, f) as u64;
                if uf == 0 {
                    continue;
                }
                if col[f] < self.col_cap[f] && row[i] < self.caps[i] {
                    if best.is_none_or(|b| uf > b.0) {
                        best = Some((uf, usize::MAX, f, None));
                    }
                    continue;
                }
                for j in 0..n {
                    if j == i || counts[j * nf + f] == 0 {
                        continue;
                    }
                    let loss = self.u.get(j, f) as u64;
                    if row[i] < self.caps[i] {
                        if row[j] > 1 && val(j, packets[j] - loss) > cur && best.is_none_or(|b| uf > b.0) {
                            best = Some((uf, j, f, None));
                        }
                    } else {
                        for g in 0..nf {
                            let ug = self.u.get(i, g) as u64;
                            if g == f || counts[i * nf + g] == 0 || ug >= uf {
                                continue;
                            }
                            let back = self.u.get(j, g) as u64;
                            if val(j, packets[j] + back - loss) > cur && best.is_none_or(|b| uf - ug > b.0) {
                                best = Some((uf - ug, j, f, Some(g)));
                            }
                        }
                    }
                }
            }
            let Some((_, j, f, g)) = best else {
                let Some(chain) = self.ejection_chain(counts, &packets, &row, &col, i, cur) else {
                    if self.pareto_swap(counts, &mut packets) {
                        continue;
                    }
                    return;
                };
                for (giver, taker, f) in chain {
                    counts[taker * nf + f] += 1;
                    packets[taker] += self.u.get(taker, f) as u64;
                    row[taker] += 1;
                    match giver {
                        Some(j) => {
                            counts[j * nf + f] -= 1;
                            packets[j] -= self.u.get(j, f) as u64;
                            row[j] -= 1;
                        }
                        None => col[f] += 1,
                    }
                }
                continue;
            };
            counts[i * nf + f] += 1;
            packets[i] += self.u.get(i, f) as u64;
            if j == usize::MAX {
                col[f] += 1;
                row[i] += 1;
                continue;
            }
            counts[j * nf + f] -= 1;
            packets[j] -= self.u.get(j, f) as u64;
            match g {
                None => {
                    row[i] += 1;
                    row[j] -= 1;
                }
                Some(g) => {
                    counts[i * nf + g] -= 1;
                    packets[i] -= self.u.get(i, g) as u64;
                    counts[j * nf + g] += 1;
                    packets[j] += self.u.get(j, g) as u64;
                }
            }
        }
    }

    /// Swaps one pair between two SUs when neither loses packets and at least
    /// one gains. Returns whether a swap was made.
    fn pareto_swap(&self, counts: &mut Counts, packets: &mut [u64]) -> bool {
        let (n, nf) = (self.n, self.nf);
        let u = |i: usize, f: usize| self.u.get(i, f) as i64;
        for j in 0..n {
            for f in 0..nf {
                if counts[j * nf + f] == 0 {
                    continue;
                }
                for l in j + 1..n {
                    for g in 0..nf {
                        if g == f || counts[l * nf + g] == 0 {
                            continue;
                        }
                        // j gives f and takes g; l gives g and takes f.
                        let dj = u(j, g) - u(j, f);
                        let dl = u(l, f) - u(l, g);
                        if dj >= 0 && dl >= 0 && dj + dl > 0 {
                            counts[j * nf + f] -= 1;
                            counts[j * nf + g] += 1;
                            counts[l * nf + g] -= 1;
                            counts[l * nf + f] += 1;
                            packets[j] = (packets[j] as i64 + dj) as u64;
                            packets[l] = (packets[l] as i64 + dl) as u64;
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// Breadth-first search for a chain of pair transfers that lifts SU `i`
    /// above `cur` while every other SU on the chain stays above `cur`.
    /// `i` takes a pair from `j1`, `j1` replaces it with a pair from `j2`, and
    /// so on until some SU can afford the loss or picks up an idle pair.
    /// Returns `(giver, taker, column)` moves.
    fn ejection_chain(
        &self,
        counts: &[u32],
        packets: &[u64],
        row: &[u32],
        col: &[u32],
        i: usize,
        cur: f64,
    ) -> Option<Vec<(Option<usize>, usize, usize)>> {
        const MAX_DEPTH: usize = 4;
        let (n, nf) = (self.n, self.nf);
        if row[i] >= self.caps[i] {
            return None;
        }
        let terms = self.obj.terms();
        let val = |j: usize, k: u64| terms[j].value(k);
        // Node: (su that lost a pair, column it lost, parent node index, depth).
        let mut nodes: Vec<(usize, usize, usize, usize)> = Vec::new();
        let mut seen = vec![false; n];
        seen[i] = true;
        let mut fs: Vec<usize> = (0..nf).filter(|&f| self.u.get(i, f) > 0).collect();
        fs.sort_by_key(|&f| std::cmp::Reverse(self.u.get(i, f)));
        for f in fs {
            for j in 0..n {
                if !seen[j] && counts[j * nf + f] > 0 {
                    seen[j] = true;
                    nodes.push((j, f, usize::MAX, 1));
                }
            }
        }
        let mut head = 0;
        while head < nodes.len() {
            let (j, lost, _, depth) = nodes[head];
            let after = packets[j] - self.u.get(j, lost) as u64;
            let mut end: Option<Option<usize>> = None;
            if row[j] > 1 && val(j, after) > cur {
                end = Some(None);
            } else {
                for g in 0..nf {
                    if g != lost && col[g] < self.col_cap[g] && val(j, after + self.u.get(j, g) as u64) > cur {
                        end = Some(Some(g));
                        break;
                    }
                }
            }
            if let Some(free) = end {
                let mut moves = Vec::new();
                if let Some(g) = free {
                    moves.push((None, j, g));
                }
                let mut at = head;
                loop {
                    let (giver, f, parent, _) = nodes[at];
                    let taker = if parent == usize::MAX { i } else { nodes[parent].0 };
                    moves.push((Some(giver), taker, f));
                    if parent == usize::MAX {
                        break;
                    }
                    at = parent;
                }
                return Some(moves);
            }
            if depth < MAX_DEPTH {
                for g in 0..nf {
                    if g == lost || val(j, after + self.u.get(j, g) as u64) <= cur {
                        continue;
                    }
                    for l in 0..n {
                        if !seen[l] && counts[l * nf + g] > 0 {
                            seen[l] = true;
                            nodes.push((l, g, head, depth + 1));
                        }
                    }
                }
            }
            head += 1;
        }
        None
    }

    fn polish_log_sum(&self, counts: &mut Counts) {
        let (n, nf) = (self.n, self.nf);
        let terms = self.obj.terms();
        let pen = self.zero_penalty;
        let lv = |i: usize, k: u64| {
            let v = terms[i].value(k);
            if v > 0.0 {
                v.ln()
            } else {
                pen
            }
        };
        let mut packets = self.packets(counts);
        let mut row: Vec<u32> = (0..n).map(|i| counts[i * nf..(i + 1) * nf].iter().sum()).collect();
        for _ in 0..10 * n * nf {
            let mut best: Option<(f64, usize, usize, usize, Option<usize>)> = None;
            for f in 0..nf {
                for j in 0..n {
                    if counts[j * nf + f] == 0 {
                        continue;
                    }
                    let loss = self.u.get(j, f) as u64;
                    for i in 0..n {
                        let gain = self.u.get(i, f) as u64;
                        if i == j || gain == 0 {
                            continue;
                        }
                        if row[i] < self.caps[i] {
                            if row[j] <= 1 {
                                continue;
                            }
                            let d = lv(i, packets[i] + gain) - lv(i, packets[i]) + lv(j, packets[j] - loss)
                                - lv(j, packets[j]);
                            if d > 1e-12 && best.is_none_or(|b| d > b.0) {
                                best = Some((d, i, j, f, None));
                            }
                        } else {
                            for g in 0..nf {
                                if g == f || counts[i * nf + g] == 0 {
                                    continue;
                                }
                                let pi = packets[i] + gain - self.u.get(i, g) as u64;
                                let pj = packets[j] - loss + self.u.get(j, g) as u64;
                                let d = lv(i, pi) - lv(i, packets[i]) + lv(j, pj) - lv(j, packets[j]);
                                if d > 1e-12 && best.is_none_or(|b| d > b.0) {
                                    best = Some((d, i, j, f, Some(g)));
                                }
                            }
                        }
                    }
                }
            }
            let Some((_, i, j, f, g)) = best else { return };
            counts[i * nf + f] += 1;
            counts[j * nf + f] -= 1;
            packets[i] += self.u.get(i, f) as u64;
            packets[j] -= self.u.get(j, f) as u64;
            match g {
                None => {
                    row[i] += 1;
                    row[j] -= 1;
                }
                Some(g) => {
                    counts[i * nf + g] -= 1;
                    counts[j * nf + g] += 1;
                    packets[i] -= self.u.get(i, g) as u64;
                    packets[j] += self.u.get(j, g) as u64;
                }
            }
        }
    }
}

struct RensState<'a> {
    model: &'a Model<'a>,
    free: Vec<usize>,
    counts: Counts,
    col: Vec<u32>,
    row: Vec<u32>,
    packets: Vec<u64>,
    upside: Vec<u64>,
    best: f64,
    found: Option<Counts>,
    budget: u64,
}

impl RensState<'_> {
    fn optimistic(&self) -> f64 {
        let m = self.model;
        let top: Vec<u64> = self.packets.iter().zip(&self.upside).map(|(p, u)| p + u).collect();
        m.obj.score(&top, m.zero_penalty)
    }

    fn dfs(&mut self, d: usize) {
        if self.budget == 0 {
            return;
        }
        self.budget -= 1;
        let m = self.model;
        if self.optimistic() <= self.best + CUT_TOL * (1.0 + self.best.abs()) {
            return;
        }
        if d == self.free.len() {
            if self.row.iter().all(|&r| r >= 1) {
                let s = m.obj.score(&self.packets, m.zero_penalty);
                if s > self.best {
                    self.best = s;
                    self.found = Some(self.counts.clone());
                }
            }
            return;
        }
        let k = self.free[d];
        let (i, f) = (k / m.nf, k % m.nf);
        let gain = m.u.get(i, f) as u64;
        self.upside[i] -= gain;
        if self.col[f] < m.col_cap[f] && self.row[i] < m.caps[i] {
            self.counts[k] += 1;
            self.col[f] += 1;
            self.row[i] += 1;
            self.packets[i] += gain;
            self.dfs(d + 1);
            self.counts[k] -= 1;
            self.col[f] -= 1;
            self.row[i] -= 1;
            self.packets[i] -= gain;
        }
        self.dfs(d + 1);
        self.upside[i] += gain;
    }
}

struct Search<'a> {
    model: &'a Model<'a>,
    best: Option<(Counts, f64)>,
    /// Per-SU packet counts needed to beat the incumbent (max-min only).
    needs: Rc<Vec<u64>>,
    nodes: u64,
    /// Nodes spent in sub-searches; not charged to the budget.
    sub_nodes: u64,
    clean: bool,
}

impl Search<'_> {
    fn improves(&self, bound: f64) -> bool {
        match &self.best {
            None => true,
            Some((_, s)) => bound > s + CUT_TOL * (1.0 + s.abs()),
        }
    }

    fn offer(&mut self, mut counts: Counts) {
        self.model.polish(&mut counts);
        let s = self.model.score(&counts);
        if self.best.as_ref().is_none_or(|(_, b)| s > *b) {
            self.best = Some((counts, s));
            if self.model.obj.kind() != ObjectiveKind::PropFair {
                self.refresh_needs(s);
            }
        }
    }

    /// Searches the support of an LP point (plus the incumbent's) with a
    /// small node budget and keeps any improvement.
    fn sub_search(&mut self, inst: &Instance, sol: &Solution, budget: u64) {
        let m = self.model;
        let mut support: Vec<bool> = m.c.iter().map(|&v| sol.var_value_raw(v) > INT_TOL).collect();
        let mut seeds = Vec::new();
        if let Some((inc, _)) = &self.best {
            for (s, &x) in support.iter_mut().zip(inc) {
                *s |= x > 0;
            }
            seeds.push(inc.clone());
        }
        if let Ok((Some(found), nodes, _)) = run(inst, budget, Some(&support), seeds, false) {
            self.sub_nodes += nodes;
            self.offer(found);
        }
    }

    fn refresh_needs(&mut self, incumbent: f64) {
        let target = incumbent + CUT_TOL * (1.0 + incumbent.abs());
        let needs = self
            .model
            .obj
            .terms()
            .iter()
            .map(|t| {
                if t.value(0) > target {
                    return 0;
                }
                let mut k = ((target - t.offset) / t.scale).floor().max(0.0) as u64;
                while k > 0 && t.value(k - 1) > target {
                    k -= 1;
                }
                while t.value(k) <= target {
                    k += 1;
                }
                k
            })
            .collect();
        self.needs = Rc::new(needs);
    }

    fn lp_step(&mut self, r: Result<SolveOutcome, microlp::Error>) -> Option<Solution> {
        match r {
            Ok(SolveOutcome::Solution(s)) => Some(s),
            Err(microlp::Error::Infeasible) => None,
            _ => {
                self.clean = false;
                None
            }
        }
    }

    /// Applies newer max-min requirements and tangent cuts, updates the
    /// incumbent, and returns the node's LP if it still needs branching.
    fn process(&mut self, mut sol: Solution, applied: Rc<Vec<u64>>, rounds: usize) -> Option<(Solution, f64)> {
        self.nodes += 1;
        let m = self.model;
        let (n, nf) = (m.n, m.nf);
        if !Rc::ptr_eq(&applied, &self.needs) {
            let needs = Rc::clone(&self.needs);
            for i in 0..n {
                if needs[i] > applied.get(i).copied().unwrap_or(0) {
                    let expr: Vec<_> = (0..nf)
                        .filter(|&f| m.u.get(i, f) > 0)
                        .map(|f| (m.c[i * nf + f], m.u.get(i, f) as f64))
                        .collect();
                    sol = self.lp_step(sol.add_constraint(expr, ComparisonOp::Ge, needs[i] as f64))?;
                }
            }
        }
        let needs = Rc::clone(&self.needs);

        let mut round = 0;
        loop {
            let values: Vec<f64> = m.c.iter().map(|&v| sol.var_value_raw(v)).collect();
            let integral = values.iter().all(|x| (x - x.round()).abs() <= INT_TOL);
            if m.obj.kind() == ObjectiveKind::PropFair && (integral || round < rounds) {
                if let Some(cut) = self.violated_tangent(&sol, &values) {
                    round += 1;
                    let (expr, rhs) = cut;
                    sol = self.lp_step(sol.add_constraint(expr, ComparisonOp::Le, rhs))?;
                    continue;
                }
            }
            if m.obj.kind() != ObjectiveKind::PropFair && !integral && round < rounds.max(1) * 4 {
                if let Some((expr, rhs)) = self.violated_rounding_cut(&values) {
                    round += 1;
                    sol = self.lp_step(sol.add_constraint(expr, ComparisonOp::Ge, rhs))?;
                    continue;
                }
            }
            let bound = sol.objective();
            if !self.improves(bound) {
                return None;
            }
            if integral {
                let counts: Counts = values.iter().map(|x| x.round() as u32).collect();
                if m.feasible(&counts) {
                    self.offer(counts);
                    return None;
                }
            }
            if let Some(g) = m.complete(m.round_lp(&values)) {
                self.offer(g);
            }
            if self.nodes % RENS_EVERY == 1 {
                let floor = self.best.as_ref().map(|b| b.1);
                if let Some(g) = m.rens(&values, floor) {
                    self.offer(g);
                }
            }
            if !self.improves(bound) {
                return None;
            }
            // A new incumbent raised the requirements: tighten this node too.
            if !Rc::ptr_eq(&needs, &self.needs) {
                return self.process_again(sol, needs);
            }
            return Some((sol, bound));
        }
    }

    fn process_again(&mut self, sol: Solution, applied: Rc<Vec<u64>>) -> Option<(Solution, f64)> {
        self.nodes -= 1;
        self.process(sol, applied, 0)
    }

    /// Chvatal-Gomory rounding of an SU's packet requirement: dividing
    /// `sum_f U_if c_if >= need_i` by `d` and rounding up both sides stays
    /// valid for integer counts. Tries `d` over the SU's distinct rates and
    /// returns the most violated cut.
    fn violated_rounding_cut(&self, values: &[f64]) -> Option<(Vec<(Variable, f64)>, f64)> {
        let m = self.model;
        let mut worst: Option<(usize, u64, f64)> = None;
        for i in 0..m.n {
            let need = self.needs[i];
            if need == 0 {
                continue;
            }
            let row = &m.u.row(i);
            let mut ds: Vec<u32> = row.iter().copied().filter(|&x| x > 0).collect();
            ds.sort_unstable();
            ds.dedup();
            for &d in &ds {
                let d = d as u64;
                let lhs: f64 = (0..m.nf)
                    .map(|f| (row[f] as u64).div_ceil(d) as f64 * values[i * m.nf + f])
                    .sum();
                let viol = need.div_ceil(d) as f64 - lhs;
                if viol > 1e-6 && worst.is_none_or(|(_, _, v)| viol > v) {
                    worst = Some((i, d, viol));
                }
            }
        }
        let (i, d, _) = worst?;
        let row = m.u.row(i);
        let expr = (0..m.nf)
            .filter(|&f| row[f] > 0)
            .map(|f| (m.c[i * m.nf + f], (row[f] as u64).div_ceil(d) as f64))
            .collect();
        Some((expr, self.needs[i].div_ceil(d) as f64))
    }

    /// Most violated tangent over all SUs at the LP point, if any.
    fn violated_tangent(&self, sol: &Solution, values: &[f64]) -> Option<(Vec<(Variable, f64)>, f64)> {
        let m = self.model;
        let terms = m.obj.terms();
        let mut worst: Option<(usize, f64, f64)> = None;
        for i in 0..m.n {
            let t = terms[i];
            let packets: f64 = (0..m.nf)
                .map(|f| values[i * m.nf + f] * m.u.get(i, f) as f64)
                .sum();
            let v = t.offset + t.scale * packets;
            if v <= t.scale * 1e-3 {
                continue;
            }
            let gap = sol.var_value_raw(m.aux[i]) - v.ln();
            if gap > CUT_TOL && worst.is_none_or(|(_, _, g)| gap > g) {
                worst = Some((i, v, gap));
            }
        }
        let (i, v, _) = worst?;
        let t = terms[i];
        Some(tangent(i, v, m.aux[i], &m.c, m.u, m.nf, t.offset, t.scale))
    }

    fn branch(&mut self, (sol, bound): (Solution, f64), stack: &mut Vec<Pending>) {
        let m = self.model;
        let mut pick: Option<(usize, f64, f64)> = None;
        for (k, &v) in m.c.iter().enumerate() {
            let x = sol.var_value_raw(v);
            let frac = x - x.floor();
            let dist = frac.min(1.0 - frac);
            if dist > INT_TOL && pick.is_none_or(|(_, _, d)| dist > d + 1e-12) {
                pick = Some((k, x, dist));
            }
        }
        let Some((k, x, _)) = pick else {
            // Integral but infeasible after rounding: nothing to branch on.
            self.clean = false;
            return;
        };
        let parent = Rc::new(sol);
        let down = (k, ComparisonOp::Le, x.floor());
        let up = (k, ComparisonOp::Ge, x.ceil());
        let (first, second) = if x - x.floor() >= 0.5 { (up, down) } else { (down, up) };
        for b in [second, first] {
            stack.push(Pending {
                parent: Rc::clone(&parent),
                parent_bound: bound,
                branch: b,
                needs: Rc::clone(&self.needs),
            });
        }
    }
}
