//! Structural and dynamical properties of the reservoir.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_esn::reservoir::build_input_matrix;
use sparse_esn::{Reservoir, ReservoirParams, ReservoirState};

fn params(n: usize, rho: f64, alpha: f64, seed: u64) -> ReservoirParams {
    ReservoirParams {
        n_nodes: n,
        alpha,
        rho,
        seed,
        ..ReservoirParams::default()
    }
}

/// Small networks need a denser recurrent matrix to avoid nilpotent draws.
fn small(n: usize, rho: f64, alpha: f64, seed: u64) -> ReservoirParams {
    ReservoirParams {
        recurrent_density: 0.2,
        ..params(n, rho, alpha, seed)
    }
}

/// Largest eigenvalue modulus from a dense real Schur decomposition.
fn dense_radius(r: &Reservoir<f64>) -> f64 {
    let n = r.n_nodes();
    let m = DMatrix::from_row_slice(n, n, &r.recurrent().weights.to_dense());
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn spectral_radius_matches_dense_eigenvalues() {
    for (seed, rho) in [(1, 0.8), (2, 0.95), (3, 0.5)] {
        let r = Reservoir::<f64>::build(params(300, rho, 0.1, seed)).unwrap();
        let oracle = dense_radius(&r);
        assert!((oracle - rho).abs() <= 1e-4 * rho, "seed {seed}: {oracle} vs {rho}");
        assert_eq!(r.recurrent().spectral_radius, rho);
    }
}

#[test]
fn f32_reservoir_keeps_the_radius() {
    let r64 = Reservoir::<f64>::build(params(200, 0.8, 0.1, 9)).unwrap();
    let r32 = Reservoir::<f32>::build(params(200, 0.8, 0.1, 9)).unwrap();
    let m = DMatrix::from_row_slice(
        200,
        200,
        &r32.recurrent().weights.to_dense().iter().map(|&w| w as f64).collect::<Vec<_>>(),
    );
    let radius = m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!((radius - 0.8).abs() < 1e-4);
    assert_eq!(r64.input().in_degrees, r32.input().in_degrees);
}

#[test]
fn in_degree_mean_near_six() {
    for seed in 0..5 {
        let p = params(1000, 0.8, 0.1, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = build_input_matrix::<f64, _>(&p, &mut rng).unwrap();
        let mean = m.in_degrees.iter().sum::<usize>() as f64 / 1000.0;
        assert!((5.0..=7.0).contains(&mean), "seed {seed}: {mean}");
        assert!(m.in_degrees.iter().all(|&k| (1..=24).contains(&k)));
    }
}

#[test]
fn input_weights_are_scale_over_fan_in() {
    let mut p = params(400, 0.8, 0.1, 4);
    p.input_scale = 1.7;
    let r = Reservoir::<f64>::build(p).unwrap();
    let w = &r.input().weights;
    for (i, &k) in r.input().in_degrees.iter().enumerate() {
        assert_eq!(w.row_nnz(i), k);
        for (_, v) in w.row(i) {
            assert!((v - 1.7 / k as f64).abs() < 1e-15);
        }
    }
}

#[test]
fn degenerate_in_degree_connects_everything() {
    let mut p = small(50, 0.8, 0.1, 5);
    p.mean_in_degree = 24.0;
    p.in_degree_sigma = 0.0;
    let r = Reservoir::<f64>::build(p).unwrap();
    assert!(r.input().in_degrees.iter().all(|&k| k == 24));
    assert!(r.input().weights.values().iter().all(|&v| (v - 1.0 / 24.0).abs() < 1e-15));
}

#[test]
fn recurrent_density_is_close_to_configured() {
    let r = Reservoir::<f64>::build(params(1000, 0.8, 0.1, 6)).unwrap();
    let d = r.recurrent().weights.density();
    // Binomial std of the density is sqrt(p(1-p)/n^2) ~ 1e-4.
    assert!((d - 0.01).abs() < 5e-4, "{d}");
}

#[test]
fn initial_conditions_wash_out() {
    let r = Reservoir::<f64>::build(params(1000, 0.8, 0.1, 7)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let inputs: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..24).map(|_| rng.random_range(0.0..2.0)).collect())
        .collect();
    let mut a = ReservoirState::<f64>::zeros(1000);
    let mut b = ReservoirState {
        v: (0..1000).map(|_| rng.random_range(0.0..3.0)).collect(),
    };
    let start: f64 = a.v.iter().zip(&b.v).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    for s in &inputs {
        a = r.step(&a, s).unwrap();
        b = r.step(&b, s).unwrap();
    }
    let end: f64 = a.v.iter().zip(&b.v).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    // The gap between the two starts is arbitrary, so the tolerance is taken
    // relative to it.
    assert!(start > 10.0);
    assert!(end / start <= 1e-3, "distance {end} from {start} after 200 steps");
}

#[test]
fn same_seed_same_reservoir() {
    let a = Reservoir::<f64>::build(params(300, 0.8, 0.1, 11)).unwrap();
    let b = Reservoir::<f64>::build(params(300, 0.8, 0.1, 11)).unwrap();
    let c = Reservoir::<f64>::build(params(300, 0.8, 0.1, 12)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn states_stay_nonnegative(
        seed in 0u64..1000,
        alpha in 0.01f64..1.0,
        rho in 0.0f64..0.99,
        v0 in prop::collection::vec(0.0f64..5.0, 60),
        input in prop::collection::vec(prop::collection::vec(0.0f64..3.0, 24), 1..20),
    ) {
        let r = Reservoir::<f64>::build(small(60, rho, alpha, seed)).unwrap();
        let mut s = ReservoirState { v: v0 };
        for x in &input {
            s = r.step(&s, x).unwrap();
            prop_assert!(s.v.iter().all(|&v| v >= 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn silent_uncoupled_nodes_decay_by_the_leak(
        seed in 0u64..1000,
        alpha in 0.01f64..1.0,
        v0 in prop::collection::vec(0.0f64..5.0, 40),
        steps in 1usize..30,
    ) {
        let r = Reservoir::<f64>::build(small(40, 0.0, alpha, seed)).unwrap();
        let mut s = ReservoirState { v: v0.clone() };
        for _ in 0..steps {
            s = r.step(&s, &[0.0; 24]).unwrap();
        }
        let k = (1.0 - alpha).powi(steps as i32);
        for (v, v0) in s.v.iter().zip(&v0) {
            prop_assert!((v - k * v0).abs() <= 1e-12 * v0.max(1.0));
        }
    }

    #[test]
    fn unit_leak_forgets_the_previous_state(
        seed in 0u64..1000,
        v0 in prop::collection::vec(0.0f64..5.0, 30),
        x in prop::collection::vec(0.0f64..3.0, 24),
    ) {
        // With alpha = 1 and no recurrence the state is relu(W_in s).
        let r = Reservoir::<f64>::build(small(30, 0.0, 1.0, seed)).unwrap();
        let a = r.step(&ReservoirState { v: v0 }, &x).unwrap();
        let b = r.step(&ReservoirState::zeros(30), &x).unwrap();
        prop_assert_eq!(a, b);
    }
}
