//! Experiment driver: plans, replications, CSV output and reports.

mod oracle;
mod output;
mod plan;
mod report;
mod sim;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ConfigError;
use crate::exact::{SolveError, SolveOptions};
use crate::metrics::{required_sample_size, summarize, MetricsError, MetricsRecord, Summary};

pub use oracle::{oracle_check, random_instance, OracleLimits, OracleMismatch, OracleReport, ORACLE_TOLERANCE};
pub use output::{read_rows, replication_path, write_csv, write_csv_to, write_replications, CsvRow, COLUMNS, SCHEMA_VERSION};
pub use plan::{
    ExperimentPlan, ReplicationPolicy, ResolvedPlan, ScenarioSource, Sweep, DEFAULT_INITIAL_PERIODS,
    DEFAULT_MAX_PERIODS,
};
pub use report::{compare_report, CompareReport, ReportRow};
pub use sim::{
    CellRun, PeriodError, PeriodOutcome, Replication, Scheduler, SchedulerParseError, SolverKind,
    DEFAULT_WARMUP_SLOTS,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: schema mismatch: {detail}")]
    SchemaMismatch { path: String, detail: String },
    #[error("{scheduler} at {sweep}, seed {seed}, period {period}: {source}")]
    Period {
        scheduler: Scheduler,
        sweep: String,
        seed: u64,
        period: u64,
        source: PeriodError,
    },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Identifies one simulated replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobKey {
    pub scheduler: Scheduler,
    pub sweep_value: Option<f64>,
    pub replication: u64,
    pub seed: u64,
}

/// Outcome of the replication-length rule for one job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationStats {
    pub initial: u64,
    /// Extra periods asked for by the sample-size formula on the pilot.
    pub requested: Option<u64>,
    /// Sample size recomputed from every measured period.
    pub recomputed: Option<u64>,
    pub periods: u64,
    /// `recomputed <= requested + initial`; absent for fixed-length runs.
    pub valid: Option<bool>,
    pub capped: bool,
    pub total_throughput: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobResult {
    pub key: JobKey,
    pub records: Vec<MetricsRecord>,
    pub stats: ReplicationStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub sweep_field: Option<String>,
    /// Ordered by sweep point, replication, then scheduler as listed.
    pub jobs: Vec<JobResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Replications simulated concurrently; 0 uses every core.
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: 0 }
    }
}

/// Runs every (sweep point, replication, scheduler) job of a plan.
pub fn run(plan: &ResolvedPlan, opts: &RunOptions) -> Result<RunResult, HarnessError> {
    let p = &plan.plan;
    let mut jobs = Vec::new();
    for (point, (value, params)) in plan.points.iter().enumerate() {
        for rep in 0..p.replications {
            for &scheduler in &p.schedulers {
                jobs.push((point, *value, params, rep, scheduler));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| HarnessError::Plan(e.to_string()))?;
    let sweep_field = p.sweep.as_ref().map(|s| s.field.clone());
    let results = pool.install(|| {
        jobs.par_iter()
            .map(|&(_, value, params, rep, scheduler)| {
                let key = JobKey {
                    scheduler,
                    sweep_value: value,
                    replication: rep,
                    seed: crate::env::replication_seed(plan.master_seed, rep),
                };
                run_job(key, params, p, sweep_field.as_deref())
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(RunResult {
        sweep_field,
        jobs: results,
    })
}

fn run_job(
    key: JobKey,
    params: &crate::params::SimParams,
    plan: &ExperimentPlan,
    sweep_field: Option<&str>,
) -> Result<JobResult, HarnessError> {
    let opts = SolveOptions {
        node_budget: plan.node_budget,
    };
    let mut rep = Replication::new(params, key.seed, plan.warmup_slots, key.scheduler, opts);
    let mut records = Vec::new();
    let mut step = |records: &mut Vec<MetricsRecord>| -> Result<(), HarnessError> {
        let period = records.len() as u64;
        let rec = rep.step().map_err(|source| HarnessError::Period {
            scheduler: key.scheduler,
            sweep: match (sweep_field, key.sweep_value) {
                (Some(f), Some(v)) => format!("{f}={v}"),
                _ => "base scenario".into(),
            },
            seed: key.seed,
            period,
            source,
        })?;
        records.push(rec);
        Ok(())
    };
    let totals = |records: &[MetricsRecord]| records.iter().map(|r| r.total_throughput).collect::<Vec<_>>();
    let stats = match plan.policy {
        ReplicationPolicy::Fixed { periods } => {
            while (records.len() as u64) < periods {
                step(&mut records)?;
            }
            ReplicationStats {
                initial: periods,
                requested: None,
                recomputed: None,
                periods,
                valid: None,
                capped: false,
                total_throughput: summary_or_point(&totals(&records), 0.05)?,
            }
        }
        ReplicationPolicy::Adaptive {
            alpha,
            half_width,
            initial,
            max_periods,
        } => {
            while (records.len() as u64) < initial {
                step(&mut records)?;
            }
            let pilot = summarize(&totals(&records), alpha)?;
            let n = required_sample_size(pilot.std_dev, alpha, half_width)?;
            let target = initial.saturating_add(n);
            let capped = target > max_periods;
            while (records.len() as u64) < target.min(max_periods) {
                step(&mut records)?;
            }
            let all = summarize(&totals(&records), alpha)?;
            let n_new = required_sample_size(all.std_dev, alpha, half_width)?;
            ReplicationStats {
                initial,
                requested: Some(n),
                recomputed: Some(n_new),
                periods: records.len() as u64,
                valid: Some(n_new <= n + initial),
                capped,
                total_throughput: all,
            }
        }
    };
    Ok(JobResult { key, records, stats })
}

fn summary_or_point(samples: &[f64], alpha: f64) -> Result<Summary, HarnessError> {
    match samples {
        [x] => Ok(Summary {
            n: 1,
            mean: *x,
            std_dev: 0.0,
            ci_half_width: 0.0,
        }),
        _ => Ok(summarize(samples, alpha)?),
    }
}

/// Loads, resolves and runs a plan file, writing the CSV and replication
/// sidecar under `out_dir` (the plan's directory when `None`).
pub fn run_plan_file(
    path: impl AsRef<Path>,
    seed: Option<u64>,
    out_dir: Option<&Path>,
    opts: &RunOptions,
) -> Result<(RunResult, PathBuf), HarnessError> {
    let (mut plan, base) = ExperimentPlan::load(path)?;
    if seed.is_some() {
        plan.seed = seed;
    }
    let resolved = plan.resolve(&base)?;
    let result = run(&resolved, opts)?;
    let dir = out_dir.map(Path::to_path_buf).unwrap_or(base);
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let csv_path = dir.join(&plan.output);
    write_csv(&result, &csv_path)?;
    write_replications(&result, &replication_path(&csv_path))?;
    Ok((result, csv_path))
}
