//! Browser bindings for a small interactive tour of the scheduler.
//!
//! Every exported function returns a JSON string; the page in `www/` parses
//! and draws it.

use cogsched::config::ScenarioConfig;
use cogsched::exact::{ObjectiveKind, SolveOptions};
use cogsched::harness::{CellRun, Replication, Scheduler, SolverKind, DEFAULT_WARMUP_SLOTS};
use cogsched::metrics::jain_index;
use cogsched::params::{Occupancy, SimParams};
use cogsched::FairnessState;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Node budget for exact solves in the browser.
const DEMO_BUDGET: u64 = 500;

#[derive(Debug, Serialize)]
pub struct CellView {
    pub radius: f64,
    pub sus: Vec<[f64; 2]>,
    pub pus: Vec<[f64; 2]>,
    /// Frequency each PU transmits on, or `None` when idle.
    pub pu_freq: Vec<Option<usize>>,
    /// `rates[i][f]`, packets per slot.
    pub rates: Vec<Vec<u32>>,
}

#[derive(Debug, Serialize)]
pub struct SchedulerView {
    pub scheduler: String,
    pub throughput: Vec<f64>,
    pub total: f64,
    pub jain: Option<f64>,
    pub objective: Option<f64>,
    pub proven_optimal: bool,
    /// Holder of each `(f, t)` pair, row-major by frequency.
    pub grid: Vec<Option<usize>>,
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub n_freqs: usize,
    pub n_slots: usize,
    pub schedulers: Vec<SchedulerView>,
}

#[derive(Debug, Serialize)]
pub struct WindowPoint {
    pub window: usize,
    /// Share of the total throughput per SU, averaged over the run.
    pub share: Vec<f64>,
    pub mean_total: f64,
}

#[derive(Debug, Serialize)]
pub struct WindowSweep {
    pub weights: Vec<f64>,
    pub points: Vec<WindowPoint>,
}

fn params(n_sus: usize, n_pus: usize, n_freqs: usize, seed: u64) -> Result<SimParams, String> {
    ScenarioConfig {
        n_sus: Some(n_sus),
        n_pus: Some(n_pus),
        n_freqs: Some(n_freqs),
        rng_seed: Some(seed),
        ..Default::default()
    }
    .to_params()
    .map_err(|e| e.to_string())
}

pub fn cell_view(n_sus: usize, n_pus: usize, n_freqs: usize, seed: u64) -> Result<CellView, String> {
    let p = params(n_sus, n_pus, n_freqs, seed)?;
    let cell = CellRun::new(&p, seed, DEFAULT_WARMUP_SLOTS);
    let u = cell.rates().map_err(|e| e.to_string())?;
    let s = cell.state();
    Ok(CellView {
        radius: p.cell_radius_m,
        sus: s.su_pos.iter().map(|q| [q.x, q.y]).collect(),
        pus: s.pu_pos.iter().map(|q| [q.x, q.y]).collect(),
        pu_freq: s
            .pu_state
            .iter()
            .map(|o| match o {
                Occupancy::Off => None,
                Occupancy::On(f) => Some(*f),
            })
            .collect(),
        rates: (0..n_sus).map(|i| u.row(i).to_vec()).collect(),
    })
}

pub fn comparison(n_sus: usize, n_pus: usize, n_freqs: usize, seed: u64) -> Result<Comparison, String> {
    let p = params(n_sus, n_pus, n_freqs, seed)?;
    let u = CellRun::new(&p, seed, DEFAULT_WARMUP_SLOTS)
        .rates()
        .map_err(|e| e.to_string())?;
    let fs = FairnessState::new(p.n_sus);
    let opts = SolveOptions {
        node_budget: DEMO_BUDGET,
    };
    let mut schedulers = Vec::new();
    for kind in ObjectiveKind::ALL {
        for solver in [SolverKind::Exact, SolverKind::Heuristic] {
            let Ok(s) = Scheduler::new(kind, solver) else { continue };
            let out = s.run(&u, &fs, &p, &opts).map_err(|e| e.to_string())?;
            let sched = &out.schedule;
            let grid = (0..p.n_freqs)
                .flat_map(|f| (0..p.slots_per_period).map(move |t| (f, t)))
                .map(|(f, t)| sched.holder(f, t))
                .collect();
            schedulers.push(SchedulerView {
                scheduler: s.to_string(),
                total: sched.total_throughput(),
                jain: jain_index(&sched.per_su_throughput),
                throughput: sched.per_su_throughput.clone(),
                objective: out.objective.is_finite().then_some(out.objective),
                proven_optimal: out.proven_optimal,
                grid,
            });
        }
    }
    Ok(Comparison {
        n_freqs: p.n_freqs,
        n_slots: p.slots_per_period,
        schedulers,
    })
}

pub fn window_points(weights: &[f64], windows: &[usize], periods: usize, seed: u64) -> Result<WindowSweep, String> {
    let mut points = Vec::new();
    for &window in windows {
        let p = ScenarioConfig {
            n_sus: Some(weights.len()),
            weights: Some(weights.to_vec()),
            window: Some(window),
            rng_seed: Some(seed),
            ..Default::default()
        }
        .to_params()
        .map_err(|e| e.to_string())?;
        let opts = SolveOptions {
            node_budget: DEMO_BUDGET,
        };
        let scheduler = Scheduler::exact(ObjectiveKind::WeightedMaxMin);
        let mut rep = Replication::new(&p, seed, DEFAULT_WARMUP_SLOTS, scheduler, opts);
        let mut sums = vec![0.0; weights.len()];
        for _ in 0..periods {
            let rec = rep.step().map_err(|e| e.to_string())?;
            for (s, x) in sums.iter_mut().zip(&rec.per_su_throughput) {
                *s += x;
            }
        }
        let total: f64 = sums.iter().sum();
        points.push(WindowPoint {
            window,
            share: sums.iter().map(|s| if total > 0.0 { s / total } else { 0.0 }).collect(),
            mean_total: total / periods.max(1) as f64,
        });
    }
    Ok(WindowSweep {
        weights: weights.to_vec(),
        points,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// Draws a cell after warm-up and returns positions, PU activity and rates.
#[wasm_bindgen]
pub fn rate_map(n_sus: usize, n_pus: usize, n_freqs: usize, seed: u64) -> Result<String, JsError> {
    to_js(cell_view(n_sus, n_pus, n_freqs, seed))
}

/// Schedules one period of the same cell with every scheduler.
#[wasm_bindgen]
pub fn schedule_compare(n_sus: usize, n_pus: usize, n_freqs: usize, seed: u64) -> Result<String, JsError> {
    to_js(comparison(n_sus, n_pus, n_freqs, seed))
}

/// Runs weighted max-min for `periods` periods at each window length.
#[wasm_bindgen]
pub fn window_sweep(weights: Vec<f64>, windows: Vec<usize>, periods: usize, seed: u64) -> Result<String, JsError> {
    to_js(window_points(&weights, &windows, periods, seed))
}
