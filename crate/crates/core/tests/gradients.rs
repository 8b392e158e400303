//! Update rules against finite differences of the squared error.

use proptest::prelude::*;
use sparse_esn::linalg::DenseMatrix;
use sparse_esn::rl::{q_values, rl_batch_update, rl_update, Transition};
use sparse_esn::training::{grad_theta_update, grad_w_update, loss, TargetVector};
use sparse_esn::{ReservoirState, SparseActivation, SparseReadout};

const H: f64 = 1e-6;
const TOL: f64 = 1e-5;

/// Nodes sit at least `GAP` away from their threshold, so a step of `H`
/// never crosses the kink.
const GAP: f64 = 0.05;

#[derive(Debug, Clone)]
struct Instance {
    v: Vec<f64>,
    theta_g: f64,
    theta_local: Vec<f64>,
    w: Vec<f64>,
    n_class: usize,
    label: usize,
}

impl Instance {
    fn n(&self) -> usize {
        self.v.len()
    }

    fn readout(&self) -> SparseReadout<f64> {
        let mut r = SparseReadout::new(self.n(), self.n_class, self.theta_g);
        r.theta_local = self.theta_local.clone();
        r.w_out = DenseMatrix::from_vec(self.n_class, self.n(), self.w.clone()).unwrap();
        r
    }

    fn state(&self) -> ReservoirState<f64> {
        ReservoirState { v: self.v.clone() }
    }
}

/// Straight from the definition, independent of the crate's readout.
fn error_naive(v: &[f64], theta: &[f64], w: &[f64], n_class: usize, label: usize) -> f64 {
    let n = v.len();
    (0..n_class)
        .map(|j| {
            let y: f64 = (0..n).map(|i| w[j * n + i] * (v[i] - theta[i]).max(0.0)).sum();
            let t = if j == label { 1.0 } else { 0.0 };
            (t - y) * (t - y)
        })
        .sum()
}

fn q_naive(v: &[f64], theta: &[f64], w: &[f64], action: usize) -> f64 {
    let n = v.len();
    (0..n).map(|i| w[action * n + i] * (v[i] - theta[i]).max(0.0)).sum()
}

fn thetas(inst: &Instance) -> Vec<f64> {
    inst.theta_local.iter().map(|t| inst.theta_g + t).collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-12)
}

fn instance(all_active: bool) -> impl Strategy<Value = Instance> {
    (2usize..16, 2usize..5).prop_flat_map(move |(n, c)| {
        (
            prop::collection::vec((0.0f64..2.0, any::<bool>()), n),
            -0.3f64..0.3,
            prop::collection::vec(-0.5f64..0.5, c * n),
            0..c,
        )
            .prop_map(move |(nodes, theta_g, w, label)| {
                let v: Vec<f64> = nodes.iter().map(|(v, _)| *v).collect();
                // Place each node's threshold GAP..GAP+0.5 below (active) or
                // above (silent) its state.
                let theta_local = nodes
                    .iter()
                    .enumerate()
                    .map(|(i, (vi, on))| {
                        let off = GAP + 0.5 * ((i * 7919) % 97) as f64 / 97.0;
                        let active = all_active || *on;
                        let theta = if active { vi - off } else { vi + off };
                        theta - theta_g
                    })
                    .collect();
                Instance {
                    v,
                    theta_g,
                    theta_local,
                    w,
                    n_class: c,
                    label,
                }
            })
    })
}

fn forward(inst: &Instance) -> (SparseReadout<f64>, SparseActivation<f64>, Vec<f64>) {
    let r = inst.readout();
    let x = r.sparse_activation(&inst.state()).unwrap();
    let y = r.output(&x).unwrap();
    (r, x, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn weight_step_is_descent_on_the_error(inst in instance(false), eta in 0.001f64..0.1) {
        let (mut r, x, y) = forward(&inst);
        let target = TargetVector::one_hot(inst.label, inst.n_class);
        let before = r.w_out.clone();
        grad_w_update(&mut r, &x, &target, &y, eta).unwrap();
        let step: Vec<f64> = r.w_out.as_slice().iter().zip(before.as_slice()).map(|(a, b)| (a - b) / eta).collect();

        let th = thetas(&inst);
        let fd: Vec<f64> = (0..inst.w.len())
            .map(|k| {
                let (mut wp, mut wm) = (inst.w.clone(), inst.w.clone());
                wp[k] += H;
                wm[k] -= H;
                let ep = error_naive(&inst.v, &th, &wp, inst.n_class, inst.label);
                let em = error_naive(&inst.v, &th, &wm, inst.n_class, inst.label);
                -(ep - em) / (2.0 * H)
            })
            .collect();
        if fd.iter().any(|g| g.abs() > 1e-9) {
            prop_assert!(rel_err(&step, &fd) < TOL, "rel err {}", rel_err(&step, &fd));
        }
    }

    #[test]
    fn threshold_step_matches_half_the_error_slope(inst in instance(false), eta in 0.001f64..0.1) {
        let (mut r, x, y) = forward(&inst);
        let target = TargetVector::one_hot(inst.label, inst.n_class);
        grad_theta_update(&mut r, &x, &target, &y, eta).unwrap();
        let th = thetas(&inst);
        for i in 0..inst.n() {
            let step = (r.theta_local[i] - inst.theta_local[i]) / eta;
            if !x.active[i] {
                // Gated by the Heaviside factor: exactly nothing.
                prop_assert_eq!(r.theta_local[i], inst.theta_local[i]);
                continue;
            }
            let (mut tp, mut tm) = (th.clone(), th.clone());
            tp[i] += H;
            tm[i] -= H;
            let slope = (error_naive(&inst.v, &tp, &inst.w, inst.n_class, inst.label)
                - error_naive(&inst.v, &tm, &inst.w, inst.n_class, inst.label))
                / (2.0 * H);
            // The published threshold rule carries no factor 2.
            let expected = -0.5 * slope;
            let scale = expected.abs().max(1e-3);
            prop_assert!((step - expected).abs() / scale < TOL, "node {i}: {step} vs {expected}");
        }
    }

    #[test]
    fn bandit_step_matches_single_action_error(inst in instance(false), action_seed in any::<u32>(), reward in 0.0f64..1.0, eta_w in 0.001f64..0.1, eta_t in 0.001f64..0.1) {
        let (mut r, x, _) = forward(&inst);
        let action = action_seed as usize % inst.n_class;
        let q = q_values(&x, &r).unwrap();
        prop_assert!((q[action] - q_naive(&inst.v, &thetas(&inst), &inst.w, action)).abs() < 1e-12);

        let before = r.clone();
        rl_update(&mut r, &Transition { x: x.clone(), action, reward }, eta_w, eta_t).unwrap();

        let th = thetas(&inst);
        let n = inst.n();
        let e = |w: &[f64], th: &[f64]| (reward - q_naive(&inst.v, th, w, action)).powi(2);
        for j in 0..inst.n_class {
            for i in 0..n {
                let k = j * n + i;
                let step = (r.w_out.as_slice()[k] - before.w_out.as_slice()[k]) / eta_w;
                if j != action {
                    prop_assert_eq!(step, 0.0);
                    continue;
                }
                let (mut wp, mut wm) = (inst.w.clone(), inst.w.clone());
                wp[k] += H;
                wm[k] -= H;
                let fd = -(e(&wp, &th) - e(&wm, &th)) / (2.0 * H);
                let scale = fd.abs().max(1e-3);
                prop_assert!((step - fd).abs() / scale < TOL, "w[{j},{i}]: {step} vs {fd}");
            }
        }
        for i in 0..n {
            let step = (r.theta_local[i] - before.theta_local[i]) / eta_t;
            if !x.active[i] {
                prop_assert_eq!(step, 0.0);
                continue;
            }
            let (mut tp, mut tm) = (th.clone(), th.clone());
            tp[i] += H;
            tm[i] -= H;
            let expected = -0.5 * (e(&inst.w, &tp) - e(&inst.w, &tm)) / (2.0 * H);
            let scale = expected.abs().max(1e-3);
            prop_assert!((step - expected).abs() / scale < TOL, "theta[{i}]: {step} vs {expected}");
        }
    }

    #[test]
    fn bandit_batch_is_the_sum_of_singles_at_frozen_parameters(
        inst in instance(false),
        picks in prop::collection::vec((any::<u32>(), 0.0f64..1.0, 0.0f64..1.0), 1..6),
    ) {
        let r0 = inst.readout();
        let transitions: Vec<Transition<f64>> = picks
            .iter()
            .map(|&(a, rew, shift)| {
                let v: Vec<f64> = inst.v.iter().map(|v| v + 0.3 * shift).collect();
                let x = r0.sparse_activation(&ReservoirState { v }).unwrap();
                Transition { x, action: a as usize % inst.n_class, reward: rew }
            })
            .collect();
        let (eta_w, eta_t) = (0.01, 0.002);
        let mut batched = r0.clone();
        rl_batch_update(&mut batched, &transitions, eta_w, eta_t).unwrap();

        let mut dw = vec![0.0; inst.w.len()];
        let mut dt = vec![0.0; inst.n()];
        for t in &transitions {
            let mut single = r0.clone();
            rl_update(&mut single, t, eta_w, eta_t).unwrap();
            for (d, (a, b)) in dw.iter_mut().zip(single.w_out.as_slice().iter().zip(r0.w_out.as_slice())) {
                *d += a - b;
            }
            for (d, (a, b)) in dt.iter_mut().zip(single.theta_local.iter().zip(&r0.theta_local)) {
                *d += a - b;
            }
        }
        for (k, d) in dw.iter().enumerate() {
            prop_assert!((batched.w_out.as_slice()[k] - r0.w_out.as_slice()[k] - d).abs() < 1e-12);
        }
        for (i, d) in dt.iter().enumerate() {
            prop_assert!((batched.theta_local[i] - r0.theta_local[i] - d).abs() < 1e-12);
        }
    }

    #[test]
    fn all_active_threshold_slope_everywhere(inst in instance(true)) {
        let (mut r, x, y) = forward(&inst);
        prop_assert_eq!(x.n_active(), inst.n());
        let target = TargetVector::one_hot(inst.label, inst.n_class);
        grad_theta_update(&mut r, &x, &target, &y, 1.0).unwrap();
        let th = thetas(&inst);
        let fd: Vec<f64> = (0..inst.n())
            .map(|i| {
                let (mut tp, mut tm) = (th.clone(), th.clone());
                tp[i] += H;
                tm[i] -= H;
                -0.5 * (error_naive(&inst.v, &tp, &inst.w, inst.n_class, inst.label)
                    - error_naive(&inst.v, &tm, &inst.w, inst.n_class, inst.label))
                    / (2.0 * H)
            })
            .collect();
        let step: Vec<f64> = r.theta_local.iter().zip(&inst.theta_local).map(|(a, b)| a - b).collect();
        if fd.iter().any(|g| g.abs() > 1e-9) {
            prop_assert!(rel_err(&step, &fd) < TOL);
        }
    }
}

#[test]
fn loss_agrees_with_the_naive_error() {
    let inst = Instance {
        v: vec![0.5, 1.2, 0.1],
        theta_g: 0.2,
        theta_local: vec![0.0, -0.1, 0.3],
        w: vec![0.3, -0.2, 0.7, 0.1, 0.4, -0.6],
        n_class: 2,
        label: 1,
    };
    let (_, _, y) = forward(&inst);
    let e = loss(&TargetVector::one_hot(1, 2), &y).unwrap();
    let naive = error_naive(&inst.v, &thetas(&inst), &inst.w, 2, 1);
    assert!((e - naive).abs() < 1e-14);
}

#[test]
fn spec_loss_example() {
    let e = loss(&TargetVector::one_hot(0, 2), &[0.6, 0.3]).unwrap();
    assert!((e - 0.25f64).abs() < 1e-15);
}

#[test]
fn zero_reward_drives_q_toward_zero() {
    let mut r = SparseReadout::<f64>::new(3, 2, 0.0);
    r.w_out = DenseMatrix::from_vec(2, 3, vec![0.5, 0.5, 0.5, 0.2, 0.2, 0.2]).unwrap();
    let x = r.sparse_activation(&ReservoirState { v: vec![1.0, 0.5, 0.2] }).unwrap();
    for _ in 0..2000 {
        for a in 0..2 {
            rl_update(&mut r, &Transition { x: x.clone(), action: a, reward: 0.0 }, 0.05, 0.0).unwrap();
        }
    }
    let q = q_values(&x, &r).unwrap();
    assert!(q.iter().all(|q| q.abs() < 1e-6), "{q:?}");
}

#[test]
fn single_output_bandit_equals_supervised_on_one_row() {
    let mut a = SparseReadout::<f64>::new(4, 1, 0.1);
    a.w_out = DenseMatrix::from_vec(1, 4, vec![0.2, -0.4, 0.1, 0.3]).unwrap();
    let mut b = a.clone();
    let x = a.sparse_activation(&ReservoirState { v: vec![0.9, 0.05, 0.6, 1.4] }).unwrap();
    let y = a.output(&x).unwrap();
    // Thresholds first: both rules read the weights from before the step.
    grad_theta_update(&mut a, &x, &TargetVector::one_hot(0, 1), &y, 0.01).unwrap();
    grad_w_update(&mut a, &x, &TargetVector::one_hot(0, 1), &y, 0.03).unwrap();
    rl_update(&mut b, &Transition { x, action: 0, reward: 1.0 }, 0.03, 0.01).unwrap();
    for (p, q) in a.w_out.as_slice().iter().zip(b.w_out.as_slice()) {
        assert!((p - q).abs() < 1e-15);
    }
    for (p, q) in a.theta_local.iter().zip(&b.theta_local) {
        assert!((p - q).abs() < 1e-15);
    }
}
