mod common;

use omd::convex::{cp_infimum, cp_objective, cp_step_sizes, project_affine, AffineConstraints};
use omd::game::{run_bandit_match, FullInfoPlayer, PayoffMatrix, Side};
use omd::harness::fit_rate;
use omd::linalg::{dot, norm1, norm2, sub};
use omd::mirror::{adaptive_eta, project_simplex, regret_certificate, MirrorMap, OmdState};
use proptest::prelude::*;
use proptest::test_runner::Config;

fn simplex_point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect()
    })
}

fn ball_point(n: usize, radius: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n).prop_map(move |v| {
        let norm = norm2(&v);
        if norm > radius {
            v.iter().map(|x| x * radius / norm).collect()
        } else {
            v
        }
    })
}

fn losses(n: usize, len: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, n), len)
}

proptest! {
    #![proptest_config(Config::with_cases(128))]

    #[test]
    fn entropy_divergence_is_strongly_convex((f, g) in (2usize..8).prop_flat_map(|n| (simplex_point(n), simplex_point(n)))) {
        let map = MirrorMap::entropy(f.len()).unwrap();
        let d = map.bregman(&f, &g).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!(d >= 0.5 * norm1(&sub(&f, &g)).powi(2) - 1e-9);
    }

    #[test]
    fn euclidean_divergence_is_half_squared_distance((f, g) in (1usize..6).prop_flat_map(|n| (ball_point(n, 2.0), ball_point(n, 2.0)))) {
        let map = MirrorMap::euclidean_ball(f.len(), 2.0).unwrap();
        let d = map.bregman(&f, &g).unwrap();
        prop_assert!((d - 0.5 * norm2(&sub(&f, &g)).powi(2)).abs() <= 1e-12);
    }

    #[test]
    fn prox_steps_stay_feasible(
        (base, loss) in (2usize..7).prop_flat_map(|n| (simplex_point(n), prop::collection::vec(-50.0f64..50.0, n))),
        eta in 0.001f64..10.0,
    ) {
        let n = base.len();
        let p = MirrorMap::entropy(n).unwrap().prox_step(&base, &loss, eta).unwrap();
        prop_assert!(p.iter().all(|x| *x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let q = MirrorMap::euclidean_ball(n, 1.0).unwrap().prox_step(&vec![0.0; n], &loss, eta).unwrap();
        prop_assert!(norm2(&q) <= 1.0 + 1e-12);
        let s = MirrorMap::euclidean_simplex(n).unwrap().prox_step(&base, &loss, eta).unwrap();
        prop_assert!(s.iter().all(|x| *x >= 0.0) && (s.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn entropy_prox_ignores_exact_shifts(
        (base, loss) in (2usize..7).prop_flat_map(|n| (simplex_point(n), prop::collection::vec(-64i32..64, n))),
        shift in -16i32..16,
    ) {
        let map = MirrorMap::entropy(base.len()).unwrap();
        let loss: Vec<f64> = loss.iter().map(|&k| k as f64 / 8.0).collect();
        let shifted: Vec<f64> = loss.iter().map(|x| x + shift as f64).collect();
        prop_assert_eq!(map.prox_step(&base, &loss, 0.25).unwrap(), map.prox_step(&base, &shifted, 0.25).unwrap());
    }

    #[test]
    fn simplex_projection_is_optimal(v in prop::collection::vec(-3.0f64..3.0, 2..8), seed in any::<u64>()) {
        let p = project_simplex(&v);
        prop_assert!(p.iter().all(|x| *x >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        // ⟨v - p, q - p⟩ ≤ 0 for every vertex q
        let residual = sub(&v, &p);
        for i in 0..v.len() {
            let mut q = vec![0.0; v.len()];
            q[i] = 1.0;
            prop_assert!(dot(&residual, &sub(&q, &p)) <= 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn fixed_step_certificate_holds(
        (stream, comparator) in (2usize..6).prop_flat_map(|n| (losses(n, 40), simplex_point(n))),
        eta in 0.01f64..2.0,
        euclidean in any::<bool>(),
    ) {
        let n = comparator.len();
        let map = if euclidean { MirrorMap::euclidean_simplex(n).unwrap() } else { MirrorMap::entropy(n).unwrap() };
        let mut state = OmdState::new(&map, 1.0).unwrap();
        let mut prediction = vec![0.0; n];
        let mut trajectory = Vec::new();
        for loss in &stream {
            trajectory.push(state.round_with(&map, &prediction, |_| loss.clone(), eta).unwrap());
            prediction.clone_from(loss);
        }
        let cert = regret_certificate(&trajectory, &map, eta, &comparator).unwrap();
        prop_assert!(cert.holds(), "{cert:?}");
    }

    #[test]
    fn adaptive_step_is_nonincreasing(history in prop::collection::vec(0.0f64..4.0, 0..60), r_max in 0.1f64..3.0) {
        let mut previous = f64::INFINITY;
        for k in 0..=history.len() {
            let eta = adaptive_eta(&history[..k], r_max).unwrap();
            prop_assert!(eta <= r_max && eta > 0.0);
            prop_assert!(eta <= previous * (1.0 + 1e-12));
            previous = eta;
        }
    }

    #[test]
    fn mixing_keeps_weights_above_floor(stream in losses(4, 60)) {
        let horizon = stream.len();
        let mut player = FullInfoPlayer::new(Side::Row, horizon, &stream[0], true).unwrap();
        for obs in &stream {
            player.step(obs).unwrap();
            prop_assert!(player.g_prime().min_weight() >= player.beta() / 4.0 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn bandit_runs_are_reproducible(seed in any::<u64>(), entries in prop::collection::vec(-1.0f64..1.0, 6)) {
        let a = PayoffMatrix::new(2, 3, entries).unwrap();
        let first = run_bandit_match(&a, 50, None, seed).unwrap();
        let second = run_bandit_match(&a, 50, None, seed).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn affine_projection_is_feasible_and_idempotent(
        point in prop::collection::vec(-5.0f64..5.0, 4),
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..3),
        rhs in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let eqs = AffineConstraints::from_dense(&rows, &rhs[..rows.len()]).unwrap();
        // skip nearly dependent systems
        prop_assume!(rows.len() == 1 || {
            let (a, b) = (&rows[0], &rows[1]);
            let cos = dot(a, b) / (norm2(a) * norm2(b));
            cos.abs() < 0.95
        });
        prop_assume!(rows.iter().all(|r| norm2(r) > 0.1));
        let p = project_affine(&point, &eqs, 1e-10).unwrap();
        prop_assert!(eqs.violation(&p) <= 1e-10);
        let q = project_affine(&p, &eqs, 1e-10).unwrap();
        prop_assert!(norm2(&sub(&p, &q)) <= 1e-8);
        // with one row the correction is parallel to it
        if let [row] = rows.as_slice() {
            let correction = sub(&point, &p);
            let along = dot(&correction, row) / dot(row, row);
            let orthogonal = sub(&correction, &row.iter().map(|x| along * x).collect::<Vec<_>>());
            prop_assert!(norm2(&orthogonal) <= 1e-7 * (1.0 + norm2(&correction)));
        }
    }

    #[test]
    fn fit_rate_recovers_power_laws(c in 0.01f64..100.0, slope in -2.0f64..-0.1) {
        let horizons = [10.0, 40.0, 160.0, 640.0];
        let values: Vec<f64> = horizons.iter().map(|t: &f64| c * t.powf(slope)).collect();
        prop_assert!((fit_rate(&horizons, &values).unwrap() - slope).abs() <= 1e-9);
    }

    #[test]
    fn closed_form_step_matches_golden_section(b in 0.1f64..10.0, d in 2usize..200, h in 0.0f64..5.0) {
        let (eta, eta_prime) = cp_step_sizes(b, d, h).unwrap();
        let upper = if h > 0.0 { 1.0 / h } else { 1e3 * b };
        // |d/dη (B²/η + η ln d/(1 - ηH))| has a sharp minimum at the stationary point
        let slope = |x: f64| (-b * b / (x * x) + (d as f64).ln() / (1.0 - x * h).powi(2)).abs();
        let numeric = common::golden_section(slope, 1e-12 * upper, upper * (1.0 - 1e-12), 1e-15);
        prop_assert!((eta - numeric).abs() <= 1e-8 * eta.max(1.0), "{eta} vs {numeric}");
        prop_assert!((eta_prime - (1.0 / eta - h)).abs() <= 1e-9 * eta_prime.max(1.0));
        prop_assert!((cp_objective(b, d, h, eta) - cp_infimum(b, d, h)).abs() <= 1e-9 * cp_infimum(b, d, h));
    }
}
