//! Interference-safe per-SU rates.
//!
//! An SU may transmit on frequency `f` only with the power that keeps the
//! most exposed active PU on `f` under its tolerable interference level
//! (free-space path loss times fading). The power reaching the CBS then sets
//! the Shannon rate, counted in packets per slot under the normalisation
//! packet size = bandwidth x slot length.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::active_pu_set;
use crate::params::{CellState, Point, SimParams};

/// Distances below this are clamped (far-field reference distance).
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("SU {su} has a non-finite distance to {target}")]
    DegenerateGeometry { su: usize, target: &'static str },
}

/// `U_if`: packets per slot SU `i` can send on frequency `f` this period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateMatrix {
    n_sus: usize,
    n_freqs: usize,
    u: Vec<u32>,
    pub period_index: u64,
}

impl RateMatrix {
    pub fn zeros(n_sus: usize, n_freqs: usize) -> Self {
        Self {
            n_sus,
            n_freqs,
            u: vec![0; n_sus * n_freqs],
            period_index: 0,
        }
    }

    /// Rows are SUs, columns frequencies. All rows must have equal length.
    pub fn from_rows(rows: &[Vec<u32>]) -> Self {
        let n_freqs = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_freqs), "ragged rate rows");
        Self {
            n_sus: rows.len(),
            n_freqs,
            u: rows.concat(),
            period_index: 0,
        }
    }

    pub fn n_sus(&self) -> usize {
        self.n_sus
    }

    pub fn n_freqs(&self) -> usize {
        self.n_freqs
    }

    pub fn get(&self, i: usize, f: usize) -> u32 {
        self.u[i * self.n_freqs + f]
    }

    pub fn set(&mut self, i: usize, f: usize, v: u32) {
        self.u[i * self.n_freqs + f] = v;
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.u[i * self.n_freqs..(i + 1) * self.n_freqs]
    }

    pub fn max_entry(&self) -> u32 {
        self.u.iter().copied().max().unwrap_or(0)
    }

    /// Every entry multiplied by `c`.
    pub fn scaled(&self, c: u32) -> Self {
        Self {
            u: self.u.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    /// Debug dump: one line per SU, one integer column per frequency.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.n_freqs).map(|f| format!("f{f}")).collect();
        let _ = writeln!(out, "su,{}", header.join(","));
        for i in 0..self.n_sus {
            let cells: Vec<String> = self.row(i).iter().map(u32::to_string).collect();
            let _ = writeln!(out, "{i},{}", cells.join(","));
        }
        out
    }
}

/// Multiplicative fading amplitudes. The AWGN setting uses 1 everywhere.
pub trait Fading {
    fn su_to_pu(&self, _su: usize, _pu: usize, _f: usize) -> f64 {
        1.0
    }
    fn su_to_cbs(&self, _su: usize, _f: usize) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Awgn;

impl Fading for Awgn {}

/// Rate computation bound to one parameter set and fading model.
pub struct Channel<'a, H: Fading = Awgn> {
    params: &'a SimParams,
    fading: H,
}

impl<'a> Channel<'a, Awgn> {
    pub fn awgn(params: &'a SimParams) -> Self {
        Self {
            params,
            fading: Awgn,
        }
    }
}

impl<'a, H: Fading> Channel<'a, H> {
    pub fn with_fading(params: &'a SimParams, fading: H) -> Self {
        Self { params, fading }
    }

    /// Largest power SU `su` may use on `f` without exceeding any active PU's
    /// tolerance. With no active PU on `f`, a virtual PU is placed on the
    /// cell boundary point nearest the SU.
    pub fn max_tx_power(&self, su: usize, f: usize, state: &CellState) -> f64 {
        let p = self.params;
        let lambda = p.wavelengths_m[f];
        let pos = state.su_pos[su];
        let bound = |tolerance: f64, d: f64, h: f64| {
            let gain = lambda / (4.0 * PI * d.max(MIN_DISTANCE_M)) * h.abs();
            tolerance / (gain * gain)
        };
        let mut best = f64::INFINITY;
        let mut any = false;
        for j in active_pu_set(state, f) {
            any = true;
            let d = pos.distance(state.pu_pos[j]);
            let h = self.fading.su_to_pu(su, j, f);
            best = best.min(bound(p.max_tolerable_if_w.get(j, f), d, h));
        }
        if !any {
            let d = p.cell_radius_m - pos.norm();
            best = bound(p.max_tolerable_if_w.boundary_w(), d, 1.0);
        }
        best
    }

    /// Amplitude gain from SU `su` to the CBS on `f`. The fading coefficient
    /// divides, as in the defining expression.
    pub fn cbs_gain(&self, su: usize, f: usize, state: &CellState) -> Result<f64, ChannelError> {
        let d = state.su_pos[su].distance(Point::ORIGIN);
        if !d.is_finite() {
            return Err(ChannelError::DegenerateGeometry { su, target: "CBS" });
        }
        let h = self.fading.su_to_cbs(su, f);
        Ok(self.params.wavelengths_m[f] / (4.0 * PI * d.max(MIN_DISTANCE_M) * h))
    }

    /// Power the CBS would receive from SU `su` at its maximum permissible power.
    pub fn received_power(
        &self,
        su: usize,
        f: usize,
        state: &CellState,
    ) -> Result<f64, ChannelError> {
        let g = self.cbs_gain(su, f, state)?;
        Ok(self.max_tx_power(su, f, state) * g * g)
    }

    pub fn rate(&self, su: usize, f: usize, state: &CellState) -> Result<u32, ChannelError> {
        let snr = self.received_power(su, f, state)? / self.params.noise_interference_w;
        Ok(rate_from_snr(snr))
    }

    pub fn rate_matrix(&self, state: &CellState) -> Result<RateMatrix, ChannelError> {
        let p = self.params;
        let mut out = RateMatrix::zeros(p.n_sus, p.n_freqs);
        for i in 0..p.n_sus {
            for f in 0..p.n_freqs {
                out.set(i, f, self.rate(i, f, state)?);
            }
        }
        Ok(out)
    }
}

/// `floor(ln(1 + snr))`. A 1e-12 nudge keeps exact integer boundaries such as
/// `snr = e^k - 1` from rounding down.
pub fn rate_from_snr(snr: f64) -> u32 {
    if !(snr > 0.0) {
        return 0;
    }
    (snr.ln_1p() + 1e-12).floor() as u32
}

pub fn max_tx_power(su: usize, f: usize, state: &CellState, p: &SimParams) -> f64 {
    Channel::awgn(p).max_tx_power(su, f, state)
}

pub fn cbs_gain(su: usize, f: usize, state: &CellState, p: &SimParams) -> Result<f64, ChannelError> {
    Channel::awgn(p).cbs_gain(su, f, state)
}

pub fn rate(su: usize, f: usize, state: &CellState, p: &SimParams) -> Result<u32, ChannelError> {
    Channel::awgn(p).rate(su, f, state)
}

/// Rates for every (SU, frequency) pair, evaluated at the given state and
/// held for the whole scheduling period.
pub fn compute_rate_matrix(state: &CellState, p: &SimParams) -> Result<RateMatrix, ChannelError> {
    Channel::awgn(p).rate_matrix(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{InterferenceLimits, Occupancy, SimParams};
    use approx::assert_relative_eq;

    fn params(n: usize, m: usize, f: usize) -> SimParams {
        let mut p = SimParams::middle(n);
        p.n_pus = m;
        p.n_freqs = f;
        p.wavelengths_m = vec![0.5; f];
        p.max_tolerable_if_w = InterferenceLimits::uniform(m, f, 0.01);
        p
    }

    #[test]
    fn max_power_single_pu() {
        let p = params(1, 1, 1);
        let mut s = CellState::stationary(vec![Point::new(0.0, 0.0)], vec![Point::new(100.0, 0.0)]);
        s.pu_state[0] = Occupancy::On(0);
        // 0.01 / (0.5 / (4 pi 100))^2
        assert_relative_eq!(max_tx_power(0, 0, &s, &p), 6.316546816697189e4, max_relative = 1e-12);
    }

    #[test]
    fn zero_tolerance_gives_zero_power() {
        let mut p = params(1, 1, 1);
        p.max_tolerable_if_w = InterferenceLimits::uniform(1, 1, 0.0);
        let mut s = CellState::stationary(vec![Point::new(0.0, 0.0)], vec![Point::new(100.0, 0.0)]);
        s.pu_state[0] = Occupancy::On(0);
        assert_eq!(max_tx_power(0, 0, &s, &p), 0.0);
        assert_eq!(rate(0, 0, &s, &p).unwrap(), 0);
    }

    #[test]
    fn closest_pu_dominates() {
        let p = params(1, 2, 1);
        let mut s = CellState::stationary(
            vec![Point::new(0.0, 0.0)],
            vec![Point::new(100.0, 0.0), Point::new(0.0, 50.0)],
        );
        s.pu_state = vec![Occupancy::On(0); 2];
        let mut only_near = s.clone();
        only_near.pu_state[0] = Occupancy::Off;
        assert_eq!(max_tx_power(0, 0, &s, &p), max_tx_power(0, 0, &only_near, &p));
    }

    #[test]
    fn cbs_gain_scaling() {
        let mut p = params(1, 0, 1);
        let s = CellState::stationary(vec![Point::new(200.0, 0.0)], vec![]);
        let g = cbs_gain(0, 0, &s, &p).unwrap();
        assert_relative_eq!(g, 1.989436788648692e-4, max_relative = 1e-12);
        p.wavelengths_m[0] = 1.0;
        assert_relative_eq!(cbs_gain(0, 0, &s, &p).unwrap(), 2.0 * g, max_relative = 1e-12);
        p.wavelengths_m[0] = 0.5;
        let far = CellState::stationary(vec![Point::new(400.0, 0.0)], vec![]);
        assert_relative_eq!(cbs_gain(0, 0, &far, &p).unwrap(), g / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn rate_floor_boundaries() {
        assert_eq!(rate_from_snr(3f64.exp() - 1.0), 3);
        assert_eq!(rate_from_snr(0.0), 0);
        assert_eq!(rate_from_snr(1.0), 0);
    }

    #[test]
    fn worked_rate_example() {
        // SU 200 m from the CBS, 100 m from the only active PU: SNR 2500.
        let p = params(1, 1, 1);
        let mut s = CellState::stationary(vec![Point::new(200.0, 0.0)], vec![Point::new(200.0, 100.0)]);
        s.pu_state[0] = Occupancy::On(0);
        let ch = Channel::awgn(&p);
        assert_relative_eq!(ch.received_power(0, 0, &s).unwrap(), 2.5e-3, max_relative = 1e-12);
        assert_eq!(rate(0, 0, &s, &p).unwrap(), 7);
    }

    #[test]
    fn colocated_su_is_clamped() {
        let p = params(1, 0, 1);
        let s = CellState::stationary(vec![Point::new(0.0, 0.0)], vec![]);
        let g = cbs_gain(0, 0, &s, &p).unwrap();
        assert_relative_eq!(g, 0.5 / (4.0 * PI), max_relative = 1e-12);
    }

    #[test]
    fn nan_position_is_degenerate() {
        let p = params(1, 0, 1);
        let s = CellState::stationary(vec![Point::new(f64::NAN, 0.0)], vec![]);
        assert!(matches!(cbs_gain(0, 0, &s, &p), Err(ChannelError::DegenerateGeometry { .. })));
    }

    #[test]
    fn idle_spectrum_is_symmetric_in_cbs_distance() {
        let p = params(3, 2, 2);
        let s = CellState::stationary(
            vec![Point::new(150.0, 0.0), Point::new(0.0, -150.0), Point::new(-106.066, 106.066)],
            vec![Point::new(10.0, 10.0), Point::new(20.0, 20.0)],
        );
        let u = compute_rate_matrix(&s, &p).unwrap();
        for f in 0..2 {
            assert_eq!(u.get(0, f), u.get(1, f));
            assert_eq!(u.get(0, f), u.get(2, f));
        }
    }

    #[test]
    fn csv_dump() {
        let u = RateMatrix::from_rows(&[vec![1, 2], vec![3, 4]]);
        assert_eq!(u.to_csv(), "su,f0,f1\n0,1,2\n1,3,4\n");
    }
}
