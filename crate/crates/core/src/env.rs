//! Random-waypoint mobility and the PU ON/OFF occupancy chain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::params::{CellState, Occupancy, Point, SimParams};

/// Deterministic random stream; one per replication.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    /// Uniform point in the disk of radius `r` centred on the origin.
    pub fn point_in_disk(&mut self, r: f64) -> Point {
        let rho = r * self.uniform().sqrt();
        let theta = 2.0 * std::f64::consts::PI * self.uniform();
        Point::new(rho * theta.cos(), rho * theta.sin())
    }
}

/// Seed of replication `index` derived from a master seed (SplitMix64 of
/// `master + index`).
pub fn replication_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform positions and waypoints, zero pause timers, every PU OFF.
pub fn initial_state(p: &SimParams, rng: &mut RngStream) -> CellState {
    let r = p.cell_radius_m;
    let su_pos: Vec<Point> = (0..p.n_sus).map(|_| rng.point_in_disk(r)).collect();
    let pu_pos: Vec<Point> = (0..p.n_pus).map(|_| rng.point_in_disk(r)).collect();
    let su_waypoint = (0..p.n_sus).map(|_| rng.point_in_disk(r)).collect();
    let pu_waypoint = (0..p.n_pus).map(|_| rng.point_in_disk(r)).collect();
    CellState {
        su_pos,
        pu_pos,
        su_waypoint,
        pu_waypoint,
        su_pause_left_s: vec![0.0; p.n_sus],
        pu_pause_left_s: vec![0.0; p.n_pus],
        pu_state: vec![Occupancy::Off; p.n_pus],
    }
}

fn move_node(
    pos: &mut Point,
    waypoint: &mut Point,
    pause_left: &mut f64,
    speed: f64,
    pause_s: f64,
    radius: f64,
    dt: f64,
    rng: &mut RngStream,
) {
    if *pause_left > 0.0 {
        *pause_left -= dt;
        if *pause_left <= 1e-9 {
            *pause_left = 0.0;
            *waypoint = rng.point_in_disk(radius);
        }
        return;
    }
    let step = speed * dt;
    let d = pos.distance(*waypoint);
    if step >= d {
        if speed > 0.0 || d == 0.0 {
            *pos = *waypoint;
            *pause_left = pause_s;
        }
    } else {
        let k = step / d;
        pos.x += (waypoint.x - pos.x) * k;
        pos.y += (waypoint.y - pos.y) * k;
    }
}

/// Advances every SU and PU by `dt` seconds of random-waypoint motion.
pub fn step_mobility(state: &CellState, p: &SimParams, rng: &mut RngStream, dt: f64) -> CellState {
    let mut s = state.clone();
    let r = p.cell_radius_m;
    for i in 0..s.su_pos.len() {
        move_node(
            &mut s.su_pos[i],
            &mut s.su_waypoint[i],
            &mut s.su_pause_left_s[i],
            p.su_speed_mps,
            p.pause_s,
            r,
            dt,
            rng,
        );
    }
    for j in 0..s.pu_pos.len() {
        move_node(
            &mut s.pu_pos[j],
            &mut s.pu_waypoint[j],
            &mut s.pu_pause_left_s[j],
            p.pu_speed_mps,
            p.pause_s,
            r,
            dt,
            rng,
        );
    }
    s
}

/// Probability of moving from `from` to `to` in one slot. ON substates only
/// communicate through OFF.
pub fn transition_probability(from: Occupancy, to: Occupancy, p_stay: f64, n_freqs: usize) -> f64 {
    match (from, to) {
        (Occupancy::Off, Occupancy::Off) => p_stay,
        (Occupancy::Off, Occupancy::On(_)) => (1.0 - p_stay) / n_freqs as f64,
        (Occupancy::On(a), Occupancy::On(b)) if a == b => p_stay,
        (Occupancy::On(_), Occupancy::On(_)) => 0.0,
        (Occupancy::On(_), Occupancy::Off) => 1.0 - p_stay,
    }
}

/// One slot of the occupancy chain for every PU.
pub fn step_pu_occupancy(state: &CellState, p: &SimParams, rng: &mut RngStream) -> CellState {
    let mut s = state.clone();
    for occ in &mut s.pu_state {
        let stay = rng.uniform() < p.p_stay;
        *occ = match (*occ, stay) {
            (o, true) => o,
            (Occupancy::Off, false) => Occupancy::On(rng.below(p.n_freqs)),
            (Occupancy::On(_), false) => Occupancy::Off,
        };
    }
    s
}

/// PUs currently transmitting on frequency `f`.
pub fn active_pu_set(state: &CellState, f: usize) -> impl Iterator<Item = usize> + '_ {
    state
        .pu_state
        .iter()
        .enumerate()
        .filter(move |(_, s)| **s == Occupancy::On(f))
        .map(|(j, _)| j)
}

/// One full time slot: mobility over `slot_len_s`, then occupancy.
pub fn step_slot(state: &CellState, p: &SimParams, rng: &mut RngStream) -> CellState {
    let moved = step_mobility(state, p, rng, p.slot_len_s);
    step_pu_occupancy(&moved, p, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_speed_stays_put() {
        let mut p = SimParams::middle(4);
        p.su_speed_mps = 0.0;
        p.pu_speed_mps = 0.0;
        let mut rng = RngStream::new(3);
        let s0 = initial_state(&p, &mut rng);
        let mut s = s0.clone();
        for _ in 0..500 {
            s = step_mobility(&s, &p, &mut rng, 0.1);
        }
        assert_eq!(s.su_pos, s0.su_pos);
        assert_eq!(s.pu_pos, s0.pu_pos);
    }

    #[test]
    fn straight_line_step() {
        let mut p = SimParams::middle(1);
        p.n_pus = 0;
        let mut s = CellState::stationary(vec![Point::ORIGIN], vec![]);
        s.su_waypoint[0] = Point::new(100.0, 0.0);
        let s = step_mobility(&s, &p, &mut RngStream::new(0), 0.1);
        assert!((s.su_pos[0].x - 1.3).abs() < 1e-12 && s.su_pos[0].y == 0.0);
    }

    #[test]
    fn arrival_starts_pause_then_new_waypoint() {
        let mut p = SimParams::middle(1);
        p.n_pus = 0;
        p.pause_s = 0.3;
        let mut s = CellState::stationary(vec![Point::ORIGIN], vec![]);
        s.su_waypoint[0] = Point::new(1.0, 0.0);
        let mut rng = RngStream::new(5);
        s = step_mobility(&s, &p, &mut rng, 0.1);
        assert_eq!(s.su_pos[0], Point::new(1.0, 0.0));
        assert_eq!(s.su_pause_left_s[0], 0.3);
        for _ in 0..2 {
            s = step_mobility(&s, &p, &mut rng, 0.1);
            assert_eq!(s.su_pos[0], Point::new(1.0, 0.0));
        }
        s = step_mobility(&s, &p, &mut rng, 0.1);
        assert_eq!(s.su_pause_left_s[0], 0.0);
        assert_ne!(s.su_waypoint[0], Point::new(1.0, 0.0));
    }

    #[test]
    fn positions_stay_in_cell() {
        let mut p = SimParams::middle(10);
        p.su_speed_mps = 25.0;
        p.pu_speed_mps = 25.0;
        p.pause_s = 0.5;
        let mut rng = RngStream::new(11);
        let mut s = initial_state(&p, &mut rng);
        for _ in 0..5000 {
            s = step_slot(&s, &p, &mut rng);
            assert!(s.is_consistent(&p));
        }
    }

    #[test]
    fn waypoint_motion_is_centre_biased() {
        // Uniform in the disk gives E|x|^2 = R^2 / 2; random waypoint sits
        // closer to the centre on average.
        let mut p = SimParams::middle(20);
        p.n_pus = 0;
        p.pause_s = 0.1;
        p.su_speed_mps = 25.0;
        p.max_tolerable_if_w = crate::params::InterferenceLimits::uniform(0, p.n_freqs, 0.01);
        let mut rng = RngStream::new(99);
        let mut s = initial_state(&p, &mut rng);
        let (mut acc, mut n) = (0.0, 0u64);
        for k in 0..60_000 {
            s = step_mobility(&s, &p, &mut rng, 1.0);
            if k >= 2_000 {
                for q in &s.su_pos {
                    acc += q.norm().powi(2);
                    n += 1;
                }
            }
        }
        let mean_sq = acc / n as f64;
        let uniform = p.cell_radius_m.powi(2) / 2.0;
        assert!(mean_sq < 0.9 * uniform, "mean |x|^2 {mean_sq} vs uniform {uniform}");
    }

    #[test]
    fn absorbing_when_p_stay_is_one() {
        let mut p = SimParams::middle(2);
        p.p_stay = 1.0;
        let mut rng = RngStream::new(1);
        let mut s = initial_state(&p, &mut rng);
        s.pu_state[3] = Occupancy::On(4);
        let before = s.pu_state.clone();
        for _ in 0..200 {
            s = step_pu_occupancy(&s, &p, &mut rng);
        }
        assert_eq!(s.pu_state, before);
    }

    #[test]
    fn transition_rows_sum_to_one() {
        let f = 15;
        let states: Vec<Occupancy> = std::iter::once(Occupancy::Off)
            .chain((0..f).map(Occupancy::On))
            .collect();
        for &from in &states {
            let total: f64 = states
                .iter()
                .map(|&to| transition_probability(from, to, 0.9, f))
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert_eq!(transition_probability(Occupancy::Off, Occupancy::Off, 0.9, f), 0.9);
        assert!(
            (transition_probability(Occupancy::Off, Occupancy::On(7), 0.9, f) - 0.1 / 15.0).abs()
                < 1e-15
        );
    }

    #[test]
    fn empirical_off_exit_split() {
        let mut p = SimParams::middle(1);
        p.n_pus = 1;
        let mut rng = RngStream::new(21);
        let base = CellState::stationary(vec![Point::ORIGIN], vec![Point::ORIGIN]);
        let trials = 200_000;
        let mut off = 0;
        let mut on_three = 0;
        for _ in 0..trials {
            match step_pu_occupancy(&base, &p, &mut rng).pu_state[0] {
                Occupancy::Off => off += 1,
                Occupancy::On(3) => on_three += 1,
                Occupancy::On(_) => {}
            }
        }
        let p_off = off as f64 / trials as f64;
        let p_three = on_three as f64 / trials as f64;
        assert!((p_off - 0.9).abs() < 0.005, "{p_off}");
        assert!((p_three - 0.1 / 15.0).abs() < 0.0015, "{p_three}");
    }

    #[test]
    fn long_run_on_fraction_is_half() {
        // Two macro states with equal stay probability: stationary ON share 1/2.
        let mut p = SimParams::middle(1);
        p.n_pus = 8;
        let mut rng = RngStream::new(4);
        let mut s = initial_state(&p, &mut rng);
        let (mut on, mut total) = (0u64, 0u64);
        for _ in 0..40_000 {
            s = step_pu_occupancy(&s, &p, &mut rng);
            on += s.pu_state.iter().filter(|o| **o != Occupancy::Off).count() as u64;
            total += s.pu_state.len() as u64;
        }
        let frac = on as f64 / total as f64;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn active_sets() {
        let mut s = CellState::stationary(vec![], vec![Point::ORIGIN; 5]);
        assert_eq!(active_pu_set(&s, 2).count(), 0);
        s.pu_state[3] = Occupancy::On(2);
        assert_eq!(active_pu_set(&s, 2).collect::<Vec<_>>(), vec![3]);
        assert_eq!(active_pu_set(&s, 1).count(), 0);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let p = SimParams::middle(6);
        let run = |seed| {
            let mut rng = RngStream::new(seed);
            let mut s = initial_state(&p, &mut rng);
            for _ in 0..300 {
                s = step_slot(&s, &p, &mut rng);
            }
            s
        };
        assert_eq!(run(17), run(17));
        assert_ne!(run(17), run(18));
    }
}
