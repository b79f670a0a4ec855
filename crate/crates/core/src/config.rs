//! TOML scenario files.
//!
//! Field names mirror [`SimParams`]; any key not listed here is rejected.
//! Omitted keys take the middle-value defaults of [`SimParams::middle`].
//!
//! ```toml
//! n_sus = 5
//! window = 5
//! weights = [0.05, 0.1, 0.2, 0.25, 0.4]
//! antennas = 3                      # or one entry per SU
//! max_tolerable_if_w = 0.01         # or an n_pus x n_freqs matrix
//! band_low_hz = 500e6
//! band_high_hz = 700e6
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{
    uniform_weights, wavelengths_for_band, InterferenceLimits, ParamError, SimParams,
    DEFAULT_BAND_HIGH_HZ, DEFAULT_BAND_LOW_HZ,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(#[from] ParamError),
    #[error("`{0}` cannot be swept")]
    UnknownSweepField(String),
    #[error("sweep value {value} is not valid for `{field}`")]
    BadSweepValue { field: String, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerSu<T> {
    All(T),
    Each(Vec<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tolerance {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

/// Scenario as written on disk.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_sus: Option<usize>,
    pub n_pus: Option<usize>,
    pub n_freqs: Option<usize>,
    pub slots_per_period: Option<usize>,
    pub slot_len_s: Option<f64>,
    pub cell_radius_m: Option<f64>,
    pub window: Option<usize>,
    pub weights: Option<Vec<f64>>,
    pub antennas: Option<PerSu<usize>>,
    pub p_stay: Option<f64>,
    pub noise_interference_w: Option<f64>,
    pub max_tolerable_if_w: Option<Tolerance>,
    pub band_low_hz: Option<f64>,
    pub band_high_hz: Option<f64>,
    pub su_speed_mps: Option<f64>,
    pub pu_speed_mps: Option<f64>,
    pub pause_s: Option<f64>,
    pub rng_seed: Option<u64>,
}

/// Fields a plan may sweep over.
pub const SWEEPABLE: &[&str] = &[
    "n_sus",
    "n_pus",
    "n_freqs",
    "slots_per_period",
    "window",
    "antennas",
    "p_stay",
    "su_speed_mps",
    "pu_speed_mps",
    "pause_s",
    "noise_interference_w",
    "cell_radius_m",
];

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Builds and validates the parameter set.
    pub fn to_params(&self) -> Result<SimParams, ConfigError> {
        let mid = SimParams::middle(self.n_sus.unwrap_or(15));
        let n = mid.n_sus;
        let n_pus = self.n_pus.unwrap_or(mid.n_pus);
        let n_freqs = self.n_freqs.unwrap_or(mid.n_freqs);
        let antennas = match &self.antennas {
            None => vec![3; n],
            Some(PerSu::All(a)) => vec![*a; n],
            Some(PerSu::Each(v)) => v.clone(),
        };
        let limits = match &self.max_tolerable_if_w {
            None => InterferenceLimits::uniform(n_pus, n_freqs, 0.01),
            Some(Tolerance::Scalar(w)) => InterferenceLimits::uniform(n_pus, n_freqs, *w),
            Some(Tolerance::Matrix(m)) => InterferenceLimits::from_matrix(m.clone()),
        };
        let low = self.band_low_hz.unwrap_or(DEFAULT_BAND_LOW_HZ);
        let high = self.band_high_hz.unwrap_or(DEFAULT_BAND_HIGH_HZ);
        if !(low > 0.0) {
            return Err(ParamError::NonPositiveParam("band_low_hz").into());
        }
        if !(high > low) {
            return Err(ParamError::NonPositiveParam("band_high_hz").into());
        }
        let p = SimParams {
            n_sus: n,
            n_pus,
            n_freqs,
            slots_per_period: self.slots_per_period.unwrap_or(mid.slots_per_period),
            slot_len_s: self.slot_len_s.unwrap_or(mid.slot_len_s),
            cell_radius_m: self.cell_radius_m.unwrap_or(mid.cell_radius_m),
            window: self.window.unwrap_or(mid.window),
            weights: self.weights.clone().unwrap_or_else(|| uniform_weights(n)),
            antennas,
            p_stay: self.p_stay.unwrap_or(mid.p_stay),
            noise_interference_w: self.noise_interference_w.unwrap_or(mid.noise_interference_w),
            max_tolerable_if_w: limits,
            wavelengths_m: wavelengths_for_band(n_freqs, low, high),
            su_speed_mps: self.su_speed_mps.unwrap_or(mid.su_speed_mps),
            pu_speed_mps: self.pu_speed_mps.unwrap_or(mid.pu_speed_mps),
            pause_s: self.pause_s.unwrap_or(mid.pause_s),
            rng_seed: self.rng_seed.unwrap_or(mid.rng_seed),
        };
        p.validate()?;
        Ok(p)
    }

    /// Returns a copy with one field overridden. Integer fields require an
    /// integral, non-negative `value`.
    pub fn with_field(&self, field: &str, value: f64) -> Result<Self, ConfigError> {
        let bad = || ConfigError::BadSweepValue {
            field: field.to_string(),
            value,
        };
        let count = || {
            if value >= 0.0 && value.fract() == 0.0 && value.is_finite() {
                Ok(value as usize)
            } else {
                Err(bad())
            }
        };
        let mut c = self.clone();
        match field {
            "n_sus" => {
                c.n_sus = Some(count()?);
                if matches!(c.antennas, Some(PerSu::Each(_))) {
                    return Err(bad());
                }
            }
            "n_pus" => {
                c.n_pus = Some(count()?);
                if let Some(Tolerance::Matrix(_)) = c.max_tolerable_if_w {
                    return Err(bad());
                }
            }
            "n_freqs" => {
                c.n_freqs = Some(count()?);
                if let Some(Tolerance::Matrix(_)) = c.max_tolerable_if_w {
                    return Err(bad());
                }
            }
            "slots_per_period" => c.slots_per_period = Some(count()?),
            "window" => c.window = Some(count()?),
            "antennas" => c.antennas = Some(PerSu::All(count()?)),
            "p_stay" => c.p_stay = Some(value),
            "su_speed_mps" => c.su_speed_mps = Some(value),
            "pu_speed_mps" => c.pu_speed_mps = Some(value),
            "pause_s" => c.pause_s = Some(value),
            "noise_interference_w" => c.noise_interference_w = Some(value),
            "cell_radius_m" => c.cell_radius_m = Some(value),
            other => return Err(ConfigError::UnknownSweepField(other.to_string())),
        }
        Ok(c)
    }
}

/// Reads a scenario file and validates it.
pub fn load_params(path: impl AsRef<Path>) -> Result<SimParams, ConfigError> {
    ScenarioConfig::load(path)?.to_params()
}
