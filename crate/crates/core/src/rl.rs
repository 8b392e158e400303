//! Bandit variant: the readout outputs Q-values, a softmax policy picks an
//! action, and only the chosen action's reward is revealed.
//!
//! `E = (R - Q(a))^2`, so the updates touch row `a` of `W_out` only:
//! `dW[a,i] = 2 eta_w (R - Q(a)) x_i` and
//! `dtheta_i = -eta_theta (R - Q(a)) W[a,i] H(x_i)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::DenseMatrix;
use crate::readout::{SparseActivation, SparseReadout};
use crate::scalar::Scalar;
use crate::simulate::EpisodeSource;
use crate::training::{train, Algorithm, Feedback, PrelearnPlan, TrainOutcome, TrainerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BanditEnv {
    pub reward_correct: f64,
    pub reward_wrong: f64,
}

impl Default for BanditEnv {
    fn default() -> Self {
        Self {
            reward_correct: 1.0,
            reward_wrong: 0.0,
        }
    }
}

impl BanditEnv {
    /// Reward for `action` when the hidden correct arm is `label`.
    pub fn reward(&self, action: usize, label: usize) -> f64 {
        if action == label {
            self.reward_correct
        } else {
            self.reward_wrong
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Transition<T> {
    pub x: SparseActivation<T>,
    pub action: usize,
    pub reward: T,
}

pub fn q_values<T: Scalar>(x: &SparseActivation<T>, readout: &SparseReadout<T>) -> Result<Vec<T>> {
    readout.output(x)
}

fn q_of<T: Scalar>(readout: &SparseReadout<T>, x: &SparseActivation<T>, action: usize) -> T {
    readout
        .w_out
        .row(action)
        .iter()
        .zip(x.x.iter().zip(&x.active))
        .filter(|(_, (_, &a))| a)
        .map(|(&w, (&xi, _))| w * xi)
        .sum()
}

/// Adds the descent direction of one transition (unit rate) to `dw` and,
/// when `learn_theta`, to `dtheta`.
pub(crate) fn accumulate_action<T: Scalar>(
    w_out: &DenseMatrix<T>,
    x: &SparseActivation<T>,
    action: usize,
    residual: T,
    learn_theta: bool,
    dw: &mut DenseMatrix<T>,
    dtheta: &mut [T],
) {
    if residual == T::zero() {
        return;
    }
    let w_row = w_out.row(action);
    if learn_theta {
        for (i, d) in dtheta.iter_mut().enumerate() {
            if x.active[i] {
                *d -= residual * w_row[i];
            }
        }
    }
    for (i, d) in dw.row_mut(action).iter_mut().enumerate() {
        if x.active[i] {
            *d += residual * x.x[i];
        }
    }
}

fn check_transition<T: Scalar>(readout: &SparseReadout<T>, t: &Transition<T>) -> Result<()> {
    check_dim("transition activation", readout.n_nodes(), t.x.len())?;
    if t.action >= readout.n_class() {
        return Err(Error::Dimension {
            context: "transition action",
            expected: readout.n_class(),
            actual: t.action,
        });
    }
    Ok(())
}

pub fn rl_update<T: Scalar>(readout: &mut SparseReadout<T>, transition: &Transition<T>, eta_w: T, eta_theta: T) -> Result<()> {
    rl_batch_update(readout, std::slice::from_ref(transition), eta_w, eta_theta)
}

/// Sums the per-transition updates, all evaluated at the incoming
/// parameters, then applies them once.
pub fn rl_batch_update<T: Scalar>(
    readout: &mut SparseReadout<T>,
    transitions: &[Transition<T>],
    eta_w: T,
    eta_theta: T,
) -> Result<()> {
    let mut dw = DenseMatrix::zeros(readout.n_class(), readout.n_nodes());
    let mut dtheta = vec![T::zero(); readout.n_nodes()];
    for t in transitions {
        check_transition(readout, t)?;
        let r = t.reward - q_of(readout, &t.x, t.action);
        accumulate_action(&readout.w_out, &t.x, t.action, r, true, &mut dw, &mut dtheta);
    }
    let sw = T::of(2.0) * eta_w;
    for (w, d) in readout.w_out.as_mut_slice().iter_mut().zip(dw.as_slice()) {
        *w += sw * *d;
    }
    for (th, d) in readout.theta_local.iter_mut().zip(dtheta) {
        *th += eta_theta * d;
    }
    Ok(())
}

/// Runs the bandit with the given algorithm's update schedule. Per episode
/// the reservoir integrates the input, the policy samples an action from
/// the softmax of Q, and the reward drives the update.
#[allow(clippy::too_many_arguments)]
pub fn run_bandit<T, S, R>(
    readout: SparseReadout<T>,
    source: &mut S,
    env: BanditEnv,
    algorithm: Algorithm,
    prelearn: Option<PrelearnPlan<'_, T>>,
    n_episodes: usize,
    config: &TrainerConfig,
    rng: &mut R,
) -> Result<TrainOutcome<T>>
where
    T: Scalar,
    S: EpisodeSource<T> + ?Sized,
    R: Rng + ?Sized,
{
    train(algorithm, readout, source, prelearn, n_episodes, config, Feedback::Bandit(env), rng)
}
