use cogsched::channel::compute_rate_matrix;
use cogsched::exact::{solve, Objective, ObjectiveKind, SolveOptions};
use cogsched::metrics::{jain_index, required_sample_size};
use cogsched::params::{CellState, Occupancy, Point};
use cogsched::{fairsch, FairnessState, HeuristicMode, RateMatrix, SimParams};
use proptest::prelude::*;

fn tiny(n: usize, f: usize, t: usize, antennas: Vec<usize>) -> SimParams {
    let mut p = SimParams::middle(n);
    p.n_freqs = f;
    p.slots_per_period = t;
    p.antennas = antennas;
    p
}

/// Feasible instances with every dimension bounded by `max_n`, `max_f`, `max_t`.
fn instance(
    max_n: usize,
    max_f: usize,
    max_t: usize,
    max_a: usize,
    max_rate: u32,
) -> impl Strategy<Value = (SimParams, RateMatrix)> {
    (1..=max_n, 1..=max_f, 1..=max_t)
        .prop_filter("coverable", |(n, f, t)| n <= &(f * t))
        .prop_flat_map(move |(n, f, t)| {
            (
                Just((n, f, t)),
                prop::collection::vec(1..=max_a, n),
                prop::collection::vec(0..=max_rate, n * f),
            )
        })
        .prop_map(|((n, f, t), a, u)| {
            let rows: Vec<Vec<u32>> = u.chunks(f).map(|c| c.to_vec()).collect();
            (tiny(n, f, t, a), RateMatrix::from_rows(&rows))
        })
}

fn exact(kind: ObjectiveKind, u: &RateMatrix, fs: &FairnessState, p: &SimParams) -> cogsched::SolveResult {
    let r = solve(kind, u, fs, p, &SolveOptions::default()).unwrap();
    assert!(r.schedule.check(u, &p.antennas).is_ok());
    r
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn maxmin_is_bounded_by_mean_throughput((mut p, u) in instance(6, 6, 4, 3, 9)) {
        p.window = 1;
        let fs = FairnessState::new(p.n_sus);
        let opts = SolveOptions { node_budget: 2_000 };
        let thr = solve(ObjectiveKind::ThroughputMax, &u, &fs, &p, &opts).unwrap();
        let mm = solve(ObjectiveKind::MaxMin, &u, &fs, &p, &opts).unwrap();
        prop_assert!(mm.objective <= thr.objective / p.n_sus as f64 + 1e-9);
    }

    #[test]
    fn scaling_rates_scales_objectives((p, u) in instance(3, 3, 3, 2, 6), c in 2u32..=4) {
        let fs = FairnessState::new(p.n_sus);
        let uc = u.scaled(c);
        let cf = c as f64;
        for kind in ObjectiveKind::ALL {
            let base = exact(kind, &u, &fs, &p);
            let scaled = exact(kind, &uc, &fs, &p);
            let obj = Objective::new(kind, &fs, &p);
            let reused = obj.value(&base.schedule.packets(&uc));
            if kind == ObjectiveKind::PropFair {
                if base.objective.is_finite() {
                    let shifted = base.objective + p.n_sus as f64 * cf.ln();
                    prop_assert!(close(scaled.objective, shifted), "{} vs {}", scaled.objective, shifted);
                } else {
                    prop_assert_eq!(scaled.objective, f64::NEG_INFINITY);
                }
            } else {
                prop_assert!(close(scaled.objective, cf * base.objective), "{kind}");
            }
            // An optimum for U stays optimal for cU.
            prop_assert!(reused == scaled.objective || close(reused, scaled.objective), "{kind}");
        }
    }

    #[test]
    fn heuristic_never_beats_exact((p, u) in instance(3, 3, 3, 2, 9), r in prop::collection::vec(0.0f64..6.0, 3), k in 1u64..4) {
        let fs = FairnessState { r: r[..p.n_sus].to_vec(), k };
        for kind in ObjectiveKind::ALL {
            let Some(mode) = kind.heuristic_mode() else { continue };
            let h = fairsch(&u, &p, mode);
            prop_assert!(h.check(&u, &p.antennas).is_ok());
            let hv = Objective::new(kind, &fs, &p).value(&h.packets(&u));
            let e = exact(kind, &u, &fs, &p);
            prop_assert!(e.proven_optimal);
            prop_assert!(hv <= e.objective + 1e-9, "{kind}: heuristic {hv} exact {}", e.objective);
        }
    }

    #[test]
    fn exact_solutions_are_reproducible((p, u) in instance(4, 4, 3, 3, 9)) {
        let fs = FairnessState::new(p.n_sus);
        for kind in ObjectiveKind::ALL {
            let a = exact(kind, &u, &fs, &p);
            let b = exact(kind, &u, &fs, &p);
            prop_assert_eq!(a.schedule, b.schedule);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn fairsch_covers_every_su((p, u) in instance(8, 6, 5, 3, 9)) {
        for mode in [HeuristicMode::MaxMin, HeuristicMode::WeightedMaxMin, HeuristicMode::PropFair] {
            let s = fairsch(&u, &p, mode);
            prop_assert!(s.check(&u, &p.antennas).is_ok(), "{mode:?}");
        }
    }

    #[test]
    fn equal_weights_reproduce_unweighted_fairsch((p, u) in instance(8, 6, 5, 3, 9)) {
        let weighted = fairsch(&u, &p, HeuristicMode::WeightedMaxMin);
        let plain = fairsch(&u, &p, HeuristicMode::MaxMin);
        prop_assert_eq!(weighted, plain);
    }

    #[test]
    fn jain_stays_in_bounds(x in prop::collection::vec(0.0f64..100.0, 1..20), c in 0.01f64..100.0) {
        if let Some(j) = jain_index(&x) {
            let n = x.len() as f64;
            prop_assert!(j >= 1.0 / n - 1e-12 && j <= 1.0 + 1e-12);
            let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
            prop_assert!((jain_index(&scaled).unwrap() - j).abs() < 1e-9);
        } else {
            prop_assert!(x.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn sample_size_is_monotone(s in 0.0f64..10.0, ds in 0.0f64..5.0, e in 0.05f64..5.0, de in 0.0f64..5.0) {
        let n = required_sample_size(s, 0.05, e).unwrap();
        prop_assert!(required_sample_size(s + ds, 0.05, e).unwrap() >= n);
        prop_assert!(required_sample_size(s, 0.05, e + de).unwrap() <= n);
    }

    #[test]
    fn constant_throughput_is_a_fixed_point(c in prop::collection::vec(0.0f64..50.0, 1..6), window in 1usize..20, periods in 1usize..40) {
        let mut fs = FairnessState::new(c.len());
        for _ in 0..periods {
            fs = fs.update_with(&c, window);
            for (r, x) in fs.r.iter().zip(&c) {
                prop_assert!((r - x).abs() <= 1e-12 * x.max(1.0));
            }
        }
    }
}

fn channel_params(n_pus: usize, n_freqs: usize) -> SimParams {
    let mut p = SimParams::middle(1);
    p.n_pus = n_pus;
    p.n_freqs = n_freqs;
    p.weights = vec![1.0];
    p.antennas = vec![1];
    p.max_tolerable_if_w = cogsched::params::InterferenceLimits::uniform(n_pus, n_freqs, 0.01);
    p.wavelengths_m = cogsched::params::wavelengths_for_band(n_freqs, 500e6, 700e6);
    p
}

fn point(r: f64, theta: f64) -> Point {
    Point::new(r * theta.cos(), r * theta.sin())
}

fn cell() -> impl Strategy<Value = (SimParams, CellState)> {
    (1usize..6, 1usize..4).prop_flat_map(|(m, nf)| {
        (
            Just((m, nf)),
            (1.0f64..590.0, 0.0f64..6.3),
            prop::collection::vec((1.0f64..600.0, 0.0f64..6.3), m),
            prop::collection::vec(0..=nf, m),
        )
            .prop_map(|((m, nf), su, pus, on)| {
                let p = channel_params(m, nf);
                let mut s = CellState::stationary(
                    vec![point(su.0, su.1)],
                    pus.iter().map(|&(r, a)| point(r, a)).collect(),
                );
                s.pu_state = on
                    .iter()
                    .map(|&f| if f == 0 { Occupancy::Off } else { Occupancy::On(f - 1) })
                    .collect();
                (p, s)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn looser_tolerance_or_less_noise_never_lowers_rates((p, s) in cell(), factor in 1.0f64..100.0) {
        let base = compute_rate_matrix(&s, &p).unwrap();
        let mut looser = p.clone();
        looser.max_tolerable_if_w = p.max_tolerable_if_w.scaled(factor);
        let mut quieter = p.clone();
        quieter.noise_interference_w = p.noise_interference_w / factor;
        for q in [looser, quieter] {
            let u = compute_rate_matrix(&s, &q).unwrap();
            for f in 0..p.n_freqs {
                prop_assert!(u.get(0, f) >= base.get(0, f));
            }
        }
    }

    #[test]
    fn another_active_pu_never_raises_rates((p, s) in cell(), f in 0usize..3, pos in (1.0f64..600.0, 0.0f64..6.3)) {
        let f = f % p.n_freqs;
        // Once a real PU is active the virtual boundary PU no longer applies,
        // so the comparison starts from a frequency that is already in use.
        prop_assume!(s.pu_state.contains(&Occupancy::On(f)));
        let base = compute_rate_matrix(&s, &p).unwrap();
        let mut more = s.clone();
        let mut q = p.clone();
        more.pu_pos.push(point(pos.0, pos.1));
        more.pu_waypoint.push(point(pos.0, pos.1));
        more.pu_pause_left_s.push(0.0);
        more.pu_state.push(Occupancy::On(f));
        q.n_pus += 1;
        q.max_tolerable_if_w = cogsched::params::InterferenceLimits::uniform(q.n_pus, q.n_freqs, 0.01);
        let u = compute_rate_matrix(&more, &q).unwrap();
        prop_assert!(u.get(0, f) <= base.get(0, f));
    }
}
