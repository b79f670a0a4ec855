//! CSV results and the replication sidecar.
//!
//! One row per (period, SU). After each replication's periods come one
//! `summary` row per SU holding means over the replication; `proven_optimal`
//! there is true only when every period was proven.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::harness::{HarnessError, JobResult, RunResult};

pub const SCHEMA_VERSION: &str = "cogsched-csv-1";

pub const COLUMNS: [&str; 13] = [
    "schema_version",
    "scheduler",
    "solver",
    "sweep_field",
    "sweep_value",
    "seed",
    "period",
    "su_index",
    "throughput",
    "total_throughput",
    "jain",
    "objective",
    "proven_optimal",
];

const REPLICATION_COLUMNS: [&str; 15] = [
    "schema_version",
    "scheduler",
    "solver",
    "sweep_field",
    "sweep_value",
    "seed",
    "initial",
    "requested",
    "recomputed",
    "periods",
    "valid",
    "capped",
    "mean_total_throughput",
    "std_dev",
    "ci_half_width",
];

/// A results row as read back; numeric cells stay text until needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub schema_version: String,
    pub scheduler: String,
    pub solver: String,
    pub sweep_field: String,
    pub sweep_value: String,
    pub seed: u64,
    pub period: String,
    pub su_index: usize,
    pub throughput: f64,
    pub total_throughput: f64,
    pub jain: Option<f64>,
    pub objective: f64,
    pub proven_optimal: bool,
}

impl CsvRow {
    pub fn is_summary(&self) -> bool {
        self.period == "summary"
    }
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn sweep_cells(result: &RunResult, job: &JobResult) -> [String; 2] {
    [
        result.sweep_field.clone().unwrap_or_default(),
        opt(job.key.sweep_value),
    ]
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn create(path: &Path) -> Result<csv::Writer<std::fs::File>, HarnessError> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.display().to_string(),
        source,
    }
}

/// Writes the results table to any sink.
pub fn write_csv_to<W: Write>(result: &RunResult, sink: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(COLUMNS)?;
    for job in &result.jobs {
        let [field, value] = sweep_cells(result, job);
        let head = |period: String, su: usize| {
            vec![
                SCHEMA_VERSION.to_string(),
                job.key.scheduler.objective.name().to_string(),
                job.key.scheduler.solver.name().to_string(),
                field.clone(),
                value.clone(),
                job.key.seed.to_string(),
                period,
                su.to_string(),
            ]
        };
        for rec in &job.records {
            for (i, &x) in rec.per_su_throughput.iter().enumerate() {
                let mut row = head(rec.period.to_string(), i);
                row.extend([
                    num(x),
                    num(rec.total_throughput),
                    opt(rec.jain.map(num)),
                    num(rec.objective),
                    rec.proven_optimal.to_string(),
                ]);
                w.write_record(&row)?;
            }
        }
        let n_sus = job.records.first().map_or(0, |r| r.per_su_throughput.len());
        let total = mean(job.records.iter().map(|r| r.total_throughput));
        let jain = mean(job.records.iter().filter_map(|r| r.jain));
        let objective = mean(job.records.iter().map(|r| r.objective));
        let proven = job.records.iter().all(|r| r.proven_optimal);
        for i in 0..n_sus {
            let mut row = head("summary".into(), i);
            row.extend([
                opt(mean(job.records.iter().map(|r| r.per_su_throughput[i])).map(num)),
                opt(total.map(num)),
                opt(jain.map(num)),
                opt(objective.map(num)),
                proven.to_string(),
            ]);
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(result: &RunResult, path: &Path) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_csv_to(result, std::io::BufWriter::new(file)).map_err(csv_err(path))
}

/// `results.csv` -> `results.replication.csv`.
pub fn replication_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv_path.with_file_name(format!("{stem}.replication.csv"))
}

/// One row per replication: the pilot, the requested and recomputed sample
/// sizes, and the resulting confidence interval of the total throughput.
pub fn write_replications(result: &RunResult, path: &Path) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    let err = csv_err(path);
    w.write_record(REPLICATION_COLUMNS).map_err(&err)?;
    for job in &result.jobs {
        let [field, value] = sweep_cells(result, job);
        let s = &job.stats;
        w.write_record([
            SCHEMA_VERSION.to_string(),
            job.key.scheduler.objective.name().to_string(),
            job.key.scheduler.solver.name().to_string(),
            field,
            value,
            job.key.seed.to_string(),
            s.initial.to_string(),
            opt(s.requested),
            opt(s.recomputed),
            s.periods.to_string(),
            opt(s.valid),
            s.capped.to_string(),
            num(s.total_throughput.mean),
            num(s.total_throughput.std_dev),
            num(s.total_throughput.ci_half_width),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Reads a results CSV, checking the header and every row's schema tag.
pub fn read_rows(path: &Path) -> Result<Vec<CsvRow>, HarnessError> {
    let mismatch = |detail: String| HarnessError::SchemaMismatch {
        path: path.display().to_string(),
        detail,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(COLUMNS) {
        return Err(mismatch(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    for row in r.deserialize::<CsvRow>() {
        let row = row.map_err(csv_err(path))?;
        if row.schema_version != SCHEMA_VERSION {
            return Err(mismatch(format!("row tagged `{}`, expected `{SCHEMA_VERSION}`", row.schema_version)));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{ExperimentPlan, RunOptions};

    fn small_run() -> RunResult {
        let plan = ExperimentPlan::from_toml_str(
            r#"
            schedulers = ["maxmin/heuristic"]
            warmup_slots = 3
            [scenario]
            n_sus = 2
            n_freqs = 3
            [policy]
            kind = "fixed"
            periods = 2
        "#,
        )
        .unwrap()
        .resolve(Path::new("."))
        .unwrap();
        crate::harness::run(&plan, &RunOptions::default()).unwrap()
    }

    #[test]
    fn rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let result = small_run();
        write_csv(&result, &path).unwrap();
        let rows = read_rows(&path).unwrap();
        assert_eq!(rows.len(), 2 * 2 + 2);
        assert_eq!(rows[0].scheduler, "maxmin");
        assert_eq!(rows[0].solver, "heuristic");
        assert_eq!(rows[0].sweep_field, "");
        assert!(rows[4].is_summary());
        let rec = &result.jobs[0].records[1];
        assert!((rows[3].throughput - rec.per_su_throughput[1]).abs() < 1e-6);
    }

    #[test]
    fn header_is_exact() {
        let mut buf = Vec::new();
        write_csv_to(&small_run(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
        assert!(text.lines().nth(1).unwrap().starts_with("cogsched-csv-1,maxmin,heuristic,,,"));
    }

    #[test]
    fn foreign_csv_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_rows(&path), Err(HarnessError::SchemaMismatch { .. })));
        let tagged = COLUMNS.join(",") + "\ncogsched-csv-0,maxmin,exact,,,1,0,0,1,1,1,1,true\n";
        std::fs::write(&path, tagged).unwrap();
        assert!(matches!(read_rows(&path), Err(HarnessError::SchemaMismatch { .. })));
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(replication_path(Path::new("a/b.csv")), PathBuf::from("a/b.replication.csv"));
    }
}
