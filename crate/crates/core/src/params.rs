//! Scenario constants and the shared cell state.
//!
//! All indices in this crate are zero-based: SU `i` in `0..n_sus`, PU `j` in
//! `0..n_pus`, frequency `f` in `0..n_freqs`, slot `t` in `0..slots_per_period`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light used to turn channel centre frequencies into wavelengths.
pub const SPEED_OF_LIGHT_MPS: f64 = 299_792_458.0;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("weights sum to {sum}, expected 1")]
    WeightSumError { sum: f64 },
    #[error("weight {index} is {value}, expected a value in (0, 1]")]
    WeightOutOfRange { index: usize, value: f64 },
    #[error("{n_sus} SUs cannot each get a (frequency, slot) pair out of {pairs}")]
    InfeasibleGeometry { n_sus: usize, pairs: usize },
    #[error("parameter `{0}` must be strictly positive")]
    NonPositiveParam(&'static str),
    #[error("parameter `{name}` has length {got}, expected {expected}")]
    DimensionMismatch {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("p_stay = {0} is not a probability")]
    InvalidProbability(f64),
}

/// Maximum tolerable interference power per (PU, frequency), in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceLimits {
    per_pu: Vec<Vec<f64>>,
    boundary_w: f64,
}

impl InterferenceLimits {
    /// Same limit for every PU on every frequency.
    pub fn uniform(n_pus: usize, n_freqs: usize, watts: f64) -> Self {
        Self {
            per_pu: vec![vec![watts; n_freqs]; n_pus],
            boundary_w: watts,
        }
    }

    /// Explicit `n_pus x n_freqs` matrix. The virtual boundary PU inherits the
    /// smallest configured entry.
    pub fn from_matrix(per_pu: Vec<Vec<f64>>) -> Self {
        let boundary_w = per_pu
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Self { per_pu, boundary_w }
    }

    pub fn get(&self, pu: usize, f: usize) -> f64 {
        self.per_pu[pu][f]
    }

    /// Tolerance assumed for the virtual PU on the cell boundary.
    pub fn boundary_w(&self) -> f64 {
        self.boundary_w
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.per_pu
    }

    /// Returns a copy with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            per_pu: self
                .per_pu
                .iter()
                .map(|row| row.iter().map(|w| w * factor).collect())
                .collect(),
            boundary_w: self.boundary_w * factor,
        }
    }
}

/// Every constant describing one simulated cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub n_sus: usize,
    pub n_pus: usize,
    pub n_freqs: usize,
    pub slots_per_period: usize,
    pub slot_len_s: f64,
    pub cell_radius_m: f64,
    /// Window length, in scheduling periods, of the throughput filter.
    pub window: usize,
    /// Target throughput shares; must sum to one.
    pub weights: Vec<f64>,
    /// Transceiver count per SU.
    pub antennas: Vec<usize>,
    /// Probability that a PU keeps its ON/OFF macro state for another slot.
    pub p_stay: f64,
    /// Noise plus PU-to-SU interference power, in watts.
    pub noise_interference_w: f64,
    pub max_tolerable_if_w: InterferenceLimits,
    pub wavelengths_m: Vec<f64>,
    pub su_speed_mps: f64,
    pub pu_speed_mps: f64,
    pub pause_s: f64,
    pub rng_seed: u64,
}

impl SimParams {
    /// Middle values of the studied parameter ranges (M = 20, F = 15,
    /// V = 13 m/s, a = 3) with `n_sus` SUs, uniform weights and window 5.
    pub fn middle(n_sus: usize) -> Self {
        let n_pus = 20;
        let n_freqs = 15;
        Self {
            n_sus,
            n_pus,
            n_freqs,
            slots_per_period: 10,
            slot_len_s: 0.1,
            cell_radius_m: 600.0,
            window: 5,
            weights: uniform_weights(n_sus),
            antennas: vec![3; n_sus],
            p_stay: 0.9,
            noise_interference_w: 1e-6,
            max_tolerable_if_w: InterferenceLimits::uniform(n_pus, n_freqs, 0.01),
            wavelengths_m: wavelengths_for_band(n_freqs, DEFAULT_BAND_LOW_HZ, DEFAULT_BAND_HIGH_HZ),
            su_speed_mps: 13.0,
            pu_speed_mps: 13.0,
            pause_s: 10.0,
            rng_seed: 1,
        }
    }

    /// Total number of (frequency, slot) pairs in one scheduling period.
    pub fn pairs(&self) -> usize {
        self.n_freqs * self.slots_per_period
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        use ParamError::*;
        let n = self.n_sus;
        if n == 0 {
            return Err(NonPositiveParam("n_sus"));
        }
        if self.n_freqs == 0 {
            return Err(NonPositiveParam("n_freqs"));
        }
        if self.slots_per_period == 0 {
            return Err(NonPositiveParam("slots_per_period"));
        }
        if self.window == 0 {
            return Err(NonPositiveParam("window"));
        }
        check_len("weights", n, self.weights.len())?;
        check_len("antennas", n, self.antennas.len())?;
        check_len("wavelengths_m", self.n_freqs, self.wavelengths_m.len())?;
        let rows = self.max_tolerable_if_w.rows();
        check_len("max_tolerable_if_w", self.n_pus, rows.len())?;
        for row in rows {
            check_len("max_tolerable_if_w row", self.n_freqs, row.len())?;
        }

        for (index, &value) in self.weights.iter().enumerate() {
            if !(value > 0.0 && value <= 1.0) {
                return Err(WeightOutOfRange { index, value });
            }
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(WeightSumError { sum });
        }
        if self.antennas.iter().any(|&a| a == 0) {
            return Err(NonPositiveParam("antennas"));
        }
        if !(0.0..=1.0).contains(&self.p_stay) {
            return Err(InvalidProbability(self.p_stay));
        }

        positive("slot_len_s", self.slot_len_s)?;
        positive("cell_radius_m", self.cell_radius_m)?;
        positive("noise_interference_w", self.noise_interference_w)?;
        positive("max_tolerable_if_w", self.max_tolerable_if_w.boundary_w())?;
        for row in rows {
            for &w in row {
                positive("max_tolerable_if_w", w)?;
            }
        }
        for &l in &self.wavelengths_m {
            positive("wavelengths_m", l)?;
        }
        positive("pause_s", self.pause_s)?;
        // Speeds may be zero (static nodes) but not negative.
        if !(self.su_speed_mps >= 0.0) {
            return Err(NonPositiveParam("su_speed_mps"));
        }
        if !(self.pu_speed_mps >= 0.0) {
            return Err(NonPositiveParam("pu_speed_mps"));
        }

        if n > self.pairs() {
            return Err(InfeasibleGeometry {
                n_sus: n,
                pairs: self.pairs(),
            });
        }
        Ok(())
    }
}

fn check_len(name: &'static str, expected: usize, got: usize) -> Result<(), ParamError> {
    if expected == got {
        Ok(())
    } else {
        Err(ParamError::DimensionMismatch {
            name,
            expected,
            got,
        })
    }
}

fn positive(name: &'static str, v: f64) -> Result<(), ParamError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ParamError::NonPositiveParam(name))
    }
}

pub const DEFAULT_BAND_LOW_HZ: f64 = 500e6;
pub const DEFAULT_BAND_HIGH_HZ: f64 = 700e6;

pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Wavelengths of `n` channels whose centre frequencies split `[low, high]`
/// into equal sub-bands.
pub fn wavelengths_for_band(n: usize, low_hz: f64, high_hz: f64) -> Vec<f64> {
    let width = (high_hz - low_hz) / n as f64;
    (0..n)
        .map(|k| SPEED_OF_LIGHT_MPS / (low_hz + (k as f64 + 0.5) * width))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Spectrum occupancy of one PU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Occupancy {
    Off,
    /// Transmitting on the given (zero-based) frequency.
    On(usize),
}

/// Positions, mobility targets and PU activity at one time slot. The CBS sits
/// at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellState {
    pub su_pos: Vec<Point>,
    pub pu_pos: Vec<Point>,
    pub su_waypoint: Vec<Point>,
    pub pu_waypoint: Vec<Point>,
    pub su_pause_left_s: Vec<f64>,
    pub pu_pause_left_s: Vec<f64>,
    pub pu_state: Vec<Occupancy>,
}

impl CellState {
    /// Static state: everyone paused at their waypoint, all PUs OFF.
    pub fn stationary(su_pos: Vec<Point>, pu_pos: Vec<Point>) -> Self {
        let n = su_pos.len();
        let m = pu_pos.len();
        Self {
            su_waypoint: su_pos.clone(),
            pu_waypoint: pu_pos.clone(),
            su_pos,
            pu_pos,
            su_pause_left_s: vec![0.0; n],
            pu_pause_left_s: vec![0.0; m],
            pu_state: vec![Occupancy::Off; m],
        }
    }

    /// Checks the disk and frequency-range invariants.
    pub fn is_consistent(&self, p: &SimParams) -> bool {
        let r = p.cell_radius_m * (1.0 + 1e-12);
        let inside = |q: &Point| q.norm() <= r;
        self.su_pos.iter().all(inside)
            && self.pu_pos.iter().all(inside)
            && self.pu_state.iter().all(|s| match s {
                Occupancy::Off => true,
                Occupancy::On(f) => *f < p.n_freqs,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig4() -> SimParams {
        let mut p = SimParams::middle(5);
        p.weights = vec![0.05, 0.1, 0.2, 0.25, 0.4];
        p
    }

    #[test]
    fn fig4_setup_is_valid() {
        assert_eq!(fig4().validate(), Ok(()));
    }

    #[test]
    fn too_many_sus_for_pairs() {
        let mut p = SimParams::middle(4);
        p.n_freqs = 1;
        p.slots_per_period = 2;
        p.wavelengths_m.truncate(1);
        p.max_tolerable_if_w = InterferenceLimits::uniform(p.n_pus, 1, 0.01);
        assert_eq!(
            p.validate(),
            Err(ParamError::InfeasibleGeometry { n_sus: 4, pairs: 2 })
        );
    }

    #[test]
    fn weights_must_sum_to_one() {
        let mut p = SimParams::middle(2);
        p.weights = vec![0.5, 0.4];
        assert!(matches!(p.validate(), Err(ParamError::WeightSumError { .. })));
    }

    #[test]
    fn non_positive_values_rejected() {
        let mut p = SimParams::middle(3);
        p.noise_interference_w = 0.0;
        assert_eq!(
            p.validate(),
            Err(ParamError::NonPositiveParam("noise_interference_w"))
        );
        let mut p = SimParams::middle(3);
        p.antennas[1] = 0;
        assert_eq!(p.validate(), Err(ParamError::NonPositiveParam("antennas")));
        let mut p = SimParams::middle(3);
        p.window = 0;
        assert_eq!(p.validate(), Err(ParamError::NonPositiveParam("window")));
    }

    #[test]
    fn table_combinations_validate() {
        for &n in &[5, 15, 30] {
            for &m in &[5, 20, 40] {
                for &f in &[3, 15, 30] {
                    for &a in &[1, 3, 5] {
                        for &v in &[1.0, 13.0, 25.0] {
                            let mut p = SimParams::middle(n);
                            p.n_pus = m;
                            p.n_freqs = f;
                            p.antennas = vec![a; n];
                            p.su_speed_mps = v;
                            p.pu_speed_mps = v;
                            p.wavelengths_m =
                                wavelengths_for_band(f, DEFAULT_BAND_LOW_HZ, DEFAULT_BAND_HIGH_HZ);
                            p.max_tolerable_if_w = InterferenceLimits::uniform(m, f, 0.01);
                            assert_eq!(p.validate(), Ok(()), "N={n} M={m} F={f} a={a}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn band_wavelengths_are_tv_band() {
        let l = wavelengths_for_band(15, DEFAULT_BAND_LOW_HZ, DEFAULT_BAND_HIGH_HZ);
        assert_eq!(l.len(), 15);
        assert!(l.windows(2).all(|w| w[0] > w[1]));
        assert!(l[0] < SPEED_OF_LIGHT_MPS / 500e6 && l[14] > SPEED_OF_LIGHT_MPS / 700e6);
    }

    #[test]
    fn boundary_tolerance_is_matrix_minimum() {
        let lim = InterferenceLimits::from_matrix(vec![vec![0.02, 0.01], vec![0.5, 0.03]]);
        assert_eq!(lim.boundary_w(), 0.01);
        assert_eq!(lim.get(1, 0), 0.5);
    }
}
