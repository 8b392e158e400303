//! Frequencies of the two random decisions: Metropolis acceptance and the
//! softmax choice of class.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparse_esn::simulate::{Presentation, ReplaySource};
use sparse_esn::training::{metropolis_round, DualCandidate, Feedback, Learner, Monitor, RunningCost};
use sparse_esn::{decide, ReservoirState, SparseReadout, TrainerConfig};

fn source() -> ReplaySource<f64> {
    ReplaySource::new(
        vec![Presentation {
            state: ReservoirState { v: vec![0.5, 0.2] },
            label: 0,
            item: 0,
        }],
        2,
    )
}

/// Acceptance count over `trials` rounds in which the running costs are
/// pinned so that `cost_plus - cost_minus = delta`.
fn accepted(delta: f64, beta: f64, trials: usize, seed: u64) -> usize {
    let config = TrainerConfig {
        beta,
        sigma_m: 0.0,
        ..TrainerConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut src = source();
    let mut monitor = Monitor::new("metropolis", &config);
    let mut dual = DualCandidate::propose(Learner::new(SparseReadout::<f64>::new(2, 2, 0.0)), 0.0, &mut rng);
    let mut n = 0;
    for _ in 0..trials {
        dual.minus.cost = RunningCost {
            value: 1.0,
            initialized: true,
        };
        dual.plus.cost = RunningCost {
            value: 1.0 + delta,
            initialized: true,
        };
        let rec = metropolis_round(&mut dual, &mut src, 0, &config, Feedback::Supervised, false, &mut rng, &mut monitor)
            .unwrap();
        assert_eq!(rec.cost_plus - rec.cost_minus, delta);
        n += rec.accepted as usize;
    }
    n
}

#[test]
fn acceptance_frequency_follows_the_law() {
    let trials = 10_000;
    for (k, &beta) in [0.0f64, 4.0].iter().enumerate() {
        for (j, &delta) in [-0.5f64, 0.0, 0.25, 0.5].iter().enumerate() {
            let p = if beta == 0.0 { 1.0 } else { f64::min(1.0, (-beta * delta).exp()) };
            let n = accepted(delta, beta, trials, (10 * k + j) as u64);
            let freq = n as f64 / trials as f64;
            let sd = (p * (1.0 - p) / trials as f64).sqrt();
            if sd == 0.0 {
                assert_eq!(n, trials, "beta {beta} delta {delta}");
            } else {
                assert!((freq - p).abs() <= 3.0 * sd, "beta {beta} delta {delta}: {freq} vs {p}");
            }
        }
    }
}

#[test]
fn paired_networks_see_the_same_episodes() {
    // With no proposal noise the two networks are identical, so every
    // episode produces the same loss on both sides and the gap stays zero.
    let config = TrainerConfig {
        sigma_m: 0.0,
        eta_w: 0.05,
        eta_theta: 0.01,
        ..TrainerConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut src = ReplaySource::new(
        vec![
            Presentation {
                state: ReservoirState { v: vec![0.9, 0.1, 0.4] },
                label: 0,
                item: 0,
            },
            Presentation {
                state: ReservoirState { v: vec![0.1, 0.7, 0.3] },
                label: 1,
                item: 1,
            },
        ],
        2,
    );
    let mut monitor = Monitor::new("composed", &config);
    let mut dual = DualCandidate::propose(Learner::new(SparseReadout::<f64>::new(3, 2, 0.05)), 0.0, &mut rng);
    for _ in 0..5 {
        let rec =
            metropolis_round(&mut dual, &mut src, 50, &config, Feedback::Supervised, true, &mut rng, &mut monitor).unwrap();
        assert_eq!(rec.cost_minus, rec.cost_plus);
        assert!(rec.accepted);
    }
    assert_eq!(src.consumed(), 250);
    assert_eq!(dual.plus.readout, dual.minus.readout);
}

#[test]
fn softmax_decisions_match_their_probabilities() {
    let y = [1.0f64, 2.0, 3.0];
    let z: f64 = y.iter().map(|v| v.exp()).sum();
    let p: Vec<f64> = y.iter().map(|v| v.exp() / z).collect();
    let draws = 100_000;
    let mut counts = [0usize; 3];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..draws {
        counts[decide(&y, 1.0, &mut rng)] += 1;
    }
    for c in 0..3 {
        let freq = counts[c] as f64 / draws as f64;
        let sd = (p[c] * (1.0 - p[c]) / draws as f64).sqrt();
        assert!((freq - p[c]).abs() <= 3.0 * sd, "class {c}: {freq} vs {}", p[c]);
    }
}

#[test]
fn cold_decisions_pick_the_largest_score() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        assert_eq!(decide(&[0.3f64, 0.9, 0.1], 1e-3, &mut rng), 1);
    }
}

#[test]
fn softmax_ignores_a_common_shift() {
    let a = sparse_esn::softmax(&[0.1f64, -2.0, 1.5], 0.7);
    let b = sparse_esn::softmax(&[100.1f64, 98.0, 101.5], 0.7);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}
