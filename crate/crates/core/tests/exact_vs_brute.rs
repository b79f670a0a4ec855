use cogsched::exact::{brute_force, solve, ObjectiveKind, SolveOptions};
use cogsched::{FairnessState, RateMatrix, SimParams};
use proptest::prelude::*;

fn tiny(n: usize, f: usize, t: usize, antennas: Vec<usize>, weights: Vec<f64>) -> SimParams {
    let mut p = SimParams::middle(n);
    p.n_freqs = f;
    p.slots_per_period = t;
    p.antennas = antennas;
    p.weights = weights;
    p
}

fn instance() -> impl Strategy<Value = (SimParams, RateMatrix, FairnessState)> {
    (1usize..=3, 1usize..=3, 1usize..=3)
        .prop_filter("coverable", |(n, f, t)| n <= &(f * t))
        .prop_flat_map(|(n, f, t)| {
            (
                Just((n, f, t)),
                prop::collection::vec(1usize..=2, n),
                prop::collection::vec(1u32..=20, n),
                prop::collection::vec(0u32..=9, n * f),
                prop::collection::vec(0.0f64..8.0, n),
                1u64..6,
                1usize..6,
            )
        })
        .prop_map(|((n, f, t), a, w, u, r, k, window)| {
            let total: u32 = w.iter().sum();
            let weights = w.iter().map(|&x| x as f64 / total as f64).collect();
            let mut p = tiny(n, f, t, a, weights);
            p.window = window;
            let rows: Vec<Vec<u32>> = u.chunks(f).map(|c| c.to_vec()).collect();
            let fs = FairnessState { r, k };
            (p, RateMatrix::from_rows(&rows), fs)
        })
}

fn agree(a: f64, b: f64) -> bool {
    (a == b) || (a - b).abs() <= 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn exact_matches_brute_force((p, u, fs) in instance()) {
        for kind in ObjectiveKind::ALL {
            let e = solve(kind, &u, &fs, &p, &SolveOptions::default()).unwrap();
            let b = brute_force(kind, &u, &fs, &p).unwrap();
            prop_assert!(e.proven_optimal);
            prop_assert!(e.schedule.check(&u, &p.antennas).is_ok());
            prop_assert!(agree(e.objective, b.objective), "{kind}: exact {} brute {}", e.objective, b.objective);
        }
    }
}

fn fresh_instance() -> impl Strategy<Value = (SimParams, RateMatrix)> {
    (1usize..=4, 1usize..=4, 1usize..=2)
        .prop_filter("coverable and small", |(n, f, t)| n <= &(f * t) && f * t <= 8)
        .prop_flat_map(|(n, f, t)| {
            (
                Just((n, f, t)),
                prop::collection::vec(1usize..=3, n),
                prop::collection::vec(0u32..=4, n * f),
            )
        })
        .prop_map(|((n, f, t), a, u)| {
            let p = tiny(n, f, t, a, vec![1.0 / n as f64; n]);
            let rows: Vec<Vec<u32>> = u.chunks(f).map(|c| c.to_vec()).collect();
            (p, RateMatrix::from_rows(&rows))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn exact_matches_brute_force_from_cold_start((p, u) in fresh_instance()) {
        let fs = FairnessState::new(p.n_sus);
        for kind in ObjectiveKind::ALL {
            let e = solve(kind, &u, &fs, &p, &SolveOptions::default()).unwrap();
            let b = brute_force(kind, &u, &fs, &p).unwrap();
            prop_assert!(e.schedule.check(&u, &p.antennas).is_ok());
            prop_assert!(agree(e.objective, b.objective), "{kind}: exact {} brute {}", e.objective, b.objective);
        }
    }
}
