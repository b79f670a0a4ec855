//! Fairness index and sample-size statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("significance level {0} outside (0, 1)")]
    InvalidAlpha(f64),
    #[error("half-width {0} must be positive")]
    InvalidHalfWidth(f64),
}

/// Jain's index `(sum x)^2 / (N sum x^2)`; `None` when every value is zero.
pub fn jain_index(x: &[f64]) -> Option<f64> {
    let sq: f64 = x.iter().map(|v| v * v).sum();
    if x.is_empty() || sq == 0.0 {
        return None;
    }
    let s: f64 = x.iter().sum();
    Some(s * s / (x.len() as f64 * sq))
}

/// Upper `alpha / 2` quantile of the standard normal.
pub fn z_two_sided(alpha: f64) -> Result<f64, MetricsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MetricsError::InvalidAlpha(alpha));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

/// Samples needed for a `1 - alpha` confidence interval of half-width at most
/// `half_width`: `ceil((z sigma / E)^2)`.
pub fn required_sample_size(sigma: f64, alpha: f64, half_width: f64) -> Result<u64, MetricsError> {
    if !(half_width > 0.0) {
        return Err(MetricsError::InvalidHalfWidth(half_width));
    }
    let z = z_two_sided(alpha)?;
    let n = (z * sigma.abs() / half_width).powi(2);
    // Guard against 4.0000000001 style rounding pushing the ceiling up.
    Ok((n - 1e-9).ceil().max(0.0) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (divisor `n - 1`).
    pub std_dev: f64,
    pub ci_half_width: f64,
}

pub fn summarize(samples: &[f64], alpha: f64) -> Result<Summary, MetricsError> {
    let n = samples.len();
    if n < 2 {
        return Err(MetricsError::TooFewSamples(n));
    }
    let z = z_two_sided(alpha)?;
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let std_dev = var.sqrt();
    Ok(Summary {
        n,
        mean,
        std_dev,
        ci_half_width: z * std_dev / (n as f64).sqrt(),
    })
}

/// One period of one trajectory as written to the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub period: u64,
    pub per_su_throughput: Vec<f64>,
    pub total_throughput: f64,
    pub jain: Option<f64>,
    pub objective: f64,
    pub proven_optimal: bool,
}

impl MetricsRecord {
    pub fn new(period: u64, per_su_throughput: Vec<f64>, objective: f64, proven_optimal: bool) -> Self {
        Self {
            period,
            total_throughput: per_su_throughput.iter().sum(),
            jain: jain_index(&per_su_throughput),
            per_su_throughput,
            objective,
            proven_optimal,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jain_examples() {
        assert_eq!(jain_index(&[1.0, 1.0, 1.0, 1.0]), Some(1.0));
        assert_eq!(jain_index(&[1.0, 0.0, 0.0, 0.0]), Some(0.25));
        assert_eq!(jain_index(&[0.0, 0.0]), None);
    }

    #[test]
    fn z_at_five_percent() {
        assert!((z_two_sided(0.05).unwrap() - 1.959964).abs() < 1e-6);
        assert!(z_two_sided(0.0).is_err());
    }

    #[test]
    fn sample_size_examples() {
        assert_eq!(required_sample_size(1.0, 0.05, 0.5), Ok(16));
        assert_eq!(required_sample_size(0.0, 0.05, 0.5), Ok(0));
        assert!(required_sample_size(1.0, 0.05, 0.0).is_err());
    }

    #[test]
    fn summary_of_small_sample() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0], 0.05).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std_dev - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(summarize(&[1.0], 0.05), Err(MetricsError::TooFewSamples(1)));
    }
}
