//! Side-by-side summary of one or more result CSVs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::harness::output::{read_rows, CsvRow};
use crate::harness::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scheduler: String,
    pub solver: String,
    pub sweep_field: String,
    pub sweep_value: String,
    pub periods: usize,
    pub mean_total_throughput: f64,
    pub mean_jain: Option<f64>,
    /// Mean over periods with a finite objective.
    pub mean_objective: Option<f64>,
    /// Heuristic mean objective over the exact one for the same objective and
    /// sweep point; heuristic rows only.
    pub heuristic_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<ReportRow>,
}

#[derive(Default)]
struct Acc {
    periods: usize,
    total: f64,
    jain: (f64, usize),
    objective: (f64, usize),
}

fn mean((s, n): (f64, usize)) -> Option<f64> {
    (n > 0).then(|| s / n as f64)
}

/// Aggregates per-period rows (one per period, taken from SU 0) by
/// scheduler, solver and sweep point. Groups are listed in first-seen order.
pub fn compare_report<P: AsRef<Path>>(csvs: &[P]) -> Result<CompareReport, HarnessError> {
    let mut order: Vec<(String, String, String, String)> = Vec::new();
    let mut acc: BTreeMap<(String, String, String, String), Acc> = BTreeMap::new();
    for path in csvs {
        for row in read_rows(path.as_ref())? {
            if row.is_summary() || row.su_index != 0 {
                continue;
            }
            let CsvRow {
                scheduler,
                solver,
                sweep_field,
                sweep_value,
                ..
            } = &row;
            let key = (scheduler.clone(), solver.clone(), sweep_field.clone(), sweep_value.clone());
            let a = acc.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                Acc::default()
            });
            a.periods += 1;
            a.total += row.total_throughput;
            if let Some(j) = row.jain {
                a.jain.0 += j;
                a.jain.1 += 1;
            }
            if row.objective.is_finite() {
                a.objective.0 += row.objective;
                a.objective.1 += 1;
            }
        }
    }
    let exact_objective = |(s, _, f, v): &(String, String, String, String)| {
        acc.get(&(s.clone(), "exact".into(), f.clone(), v.clone()))
            .and_then(|a| mean(a.objective))
    };
    let rows = order
        .iter()
        .map(|key| {
            let a = &acc[key];
            let mean_objective = mean(a.objective);
            let heuristic_ratio = match (key.1.as_str(), mean_objective, exact_objective(key)) {
                ("heuristic", Some(h), Some(e)) if e != 0.0 => Some(h / e),
                _ => None,
            };
            ReportRow {
                scheduler: key.0.clone(),
                solver: key.1.clone(),
                sweep_field: key.2.clone(),
                sweep_value: key.3.clone(),
                periods: a.periods,
                mean_total_throughput: a.total / a.periods as f64,
                mean_jain: mean(a.jain),
                mean_objective,
                heuristic_ratio,
            }
        })
        .collect();
    Ok(CompareReport { rows })
}

impl CompareReport {
    pub fn write_csv<W: std::io::Write>(&self, sink: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(sink);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        writeln!(
            f,
            "{:<10} {:<10} {:<18} {:>8} {:>12} {:>8} {:>12} {:>8}",
            "scheduler", "solver", "sweep", "periods", "throughput", "jain", "objective", "ratio"
        )?;
        for r in &self.rows {
            let sweep = if r.sweep_field.is_empty() {
                "-".to_string()
            } else {
                format!("{}={}", r.sweep_field, r.sweep_value)
            };
            writeln!(
                f,
                "{:<10} {:<10} {:<18} {:>8} {:>12.4} {:>8} {:>12} {:>8}",
                r.scheduler,
                r.solver,
                sweep,
                r.periods,
                r.mean_total_throughput,
                cell(r.mean_jain),
                cell(r.mean_objective),
                cell(r.heuristic_ratio)
            )?;
        }
        Ok(())
    }
}
