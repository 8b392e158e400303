//! The four learning algorithms for the sparse readout.
//!
//! * `gd_w`: gradient descent on `W_out` reading the raw hidden state.
//! * `gd_theta`: gradient descent on `W_out` and the local thresholds.
//! * `metropolis`: stochastic search over a single global threshold, with
//!   `W_out` trained by gradient descent in both compared networks.
//! * `composed`: global threshold by Metropolis, local thresholds and
//!   `W_out` by gradient descent, preceded by a short prelearning phase.
//!
//! Batched updates average the per-episode directions, i.e. the summed
//! update is taken with rate `eta / n_batch`.

mod gradient;
mod metropolis;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::metrics::{theta_stats, MetricsRecord, WindowedMean};
use crate::readout::{decide, SparseActivation, SparseReadout};
use crate::rl::BanditEnv;
use crate::scalar::Scalar;
use crate::simulate::{EpisodeSource, Presentation};

pub use gradient::{grad_theta_update, grad_w_update, loss, TargetVector};
pub use metropolis::{
    acceptance_probability, metropolis_round, prelearn_theta_g, train_composed, train_metropolis,
    AcceptanceRecord, DualCandidate, PrelearnOutcome, PrelearnPlan, RunningCost,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    GdW,
    GdTheta,
    Metropolis,
    Composed,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::GdW,
        Algorithm::GdTheta,
        Algorithm::Metropolis,
        Algorithm::Composed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::GdW => "gd_w",
            Algorithm::GdTheta => "gd_theta",
            Algorithm::Metropolis => "metropolis",
            Algorithm::Composed => "composed",
        }
    }

    /// Stable small index used for seed derivation.
    pub fn index(self) -> u16 {
        match self {
            Algorithm::GdW => 0,
            Algorithm::GdTheta => 1,
            Algorithm::Metropolis => 2,
            Algorithm::Composed => 3,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config("algorithms", format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub eta_w: f64,
    pub eta_theta: f64,
    pub n_batch: usize,
    /// Proposal standard deviation for the global threshold.
    pub sigma_m: f64,
    /// Episodes per Metropolis decision.
    pub m_steps: usize,
    /// Inverse temperature of the acceptance rule.
    pub beta: f64,
    /// Running-cost rate.
    pub alpha_m: f64,
    /// Softmax temperature of the decision.
    pub temperature: f64,
    pub log_interval: usize,
    pub accuracy_window: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            eta_w: 0.0018,
            eta_theta: 0.00018,
            n_batch: 1,
            sigma_m: 0.05,
            m_steps: 100,
            beta: 4.0,
            alpha_m: 0.01,
            temperature: 1.0,
            log_interval: 1000,
            accuracy_window: 1000,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, format!("{v} must be a nonnegative finite rate")))
            }
        };
        positive("eta_w", self.eta_w)?;
        positive("eta_theta", self.eta_theta)?;
        positive("sigma_m", self.sigma_m)?;
        positive("beta", self.beta)?;
        if self.n_batch == 0 {
            return Err(Error::config("n_batch", "must be at least 1"));
        }
        if self.m_steps == 0 {
            return Err(Error::config("m_steps", "must be at least 1"));
        }
        if !(self.alpha_m > 0.0 && self.alpha_m <= 1.0) {
            return Err(Error::config("alpha_m", format!("{} not in (0, 1]", self.alpha_m)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::config("temperature", "must be positive"));
        }
        if self.log_interval == 0 {
            return Err(Error::config("log_interval", "must be at least 1"));
        }
        if self.accuracy_window == 0 {
            return Err(Error::config("accuracy_window", "must be at least 1"));
        }
        Ok(())
    }
}

/// How a learner is told how well it did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feedback {
    /// Full one-hot target; every output row is corrected.
    Supervised,
    /// Only the reward of the sampled action is revealed.
    Bandit(BanditEnv),
}

/// Whether the readout sees `V` directly or through the thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadMode {
    Raw,
    Thresholded,
}

/// Per-episode result of one learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub loss: f64,
    pub choice: usize,
    pub correct: bool,
    pub reward: Option<f64>,
    pub coding_level: f64,
}

/// Accumulated descent directions within one batch.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BatchGradient<T> {
    dw: DenseMatrix<T>,
    dtheta: Vec<T>,
    count: usize,
}

impl<T: Scalar> BatchGradient<T> {
    pub(crate) fn new(n_class: usize, n_nodes: usize) -> Self {
        Self {
            dw: DenseMatrix::zeros(n_class, n_nodes),
            dtheta: vec![T::zero(); n_nodes],
            count: 0,
        }
    }

    pub(crate) fn count(&self) -> usize {
        self.count
    }

    /// Applies the mean direction of the batch and clears it.
    pub(crate) fn apply(&mut self, readout: &mut SparseReadout<T>, eta_w: T, eta_theta: T, learn_local: bool) {
        if self.count == 0 {
            return;
        }
        let inv = T::one() / T::of(self.count as f64);
        let sw = T::of(2.0) * eta_w * inv;
        for (w, d) in readout.w_out.as_mut_slice().iter_mut().zip(self.dw.as_slice()) {
            *w += sw * *d;
        }
        if learn_local {
            let st = eta_theta * inv;
            for (t, d) in readout.theta_local.iter_mut().zip(&self.dtheta) {
                *t += st * *d;
            }
        }
        self.dw.fill(T::zero());
        self.dtheta.fill(T::zero());
        self.count = 0;
    }
}

/// A readout together with its batch state and running cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner<T> {
    pub readout: SparseReadout<T>,
    pub cost: RunningCost,
    pub(crate) batch: BatchGradient<T>,
    act: SparseActivation<T>,
    y: Vec<T>,
    residual: Vec<T>,
}

impl<T: Scalar> Learner<T> {
    pub fn new(readout: SparseReadout<T>) -> Self {
        let (n, c) = (readout.n_nodes(), readout.n_class());
        Self {
            readout,
            cost: RunningCost::default(),
            batch: BatchGradient::new(c, n),
            act: SparseActivation::empty(n),
            y: vec![T::zero(); c],
            residual: vec![T::zero(); c],
        }
    }

    pub fn activation(&self) -> &SparseActivation<T> {
        &self.act
    }

    /// Evaluates the presentation, samples a decision, and adds this
    /// episode's descent direction to the open batch.
    pub fn observe<R: Rng + ?Sized>(
        &mut self,
        p: &Presentation<T>,
        mode: ReadMode,
        feedback: Feedback,
        learn_local: bool,
        temperature: f64,
        rng: &mut R,
    ) -> StepOutcome {
        match mode {
            ReadMode::Raw => self.act.set_raw(&p.state.v),
            ReadMode::Thresholded => self.readout.activate_into(&p.state.v, &mut self.act),
        }
        self.readout.output_into(&self.act, &mut self.y);
        let choice = decide(&self.y, temperature, rng);
        let correct = choice == p.label;
        let coding_level = self.act.coding_level();
        let learn_theta = learn_local && mode == ReadMode::Thresholded;

        let (loss, reward) = match feedback {
            Feedback::Supervised => {
                gradient::residual_into(p.label, &self.y, &mut self.residual);
                let loss: T = self.residual.iter().map(|&r| r * r).sum();
                for (j, &r) in self.residual.iter().enumerate() {
                    gradient::add_scaled_active(self.batch.dw.row_mut(j), &self.act, r);
                }
                if learn_theta {
                    gradient::theta_direction_add(
                        &self.readout.w_out,
                        &self.act,
                        &self.residual,
                        T::one(),
                        &mut self.batch.dtheta,
                    );
                }
                (loss.to_f64_lossy(), None)
            }
            Feedback::Bandit(env) => {
                let reward = env.reward(choice, p.label);
                let r = T::of(reward) - self.y[choice];
                crate::rl::accumulate_action(
                    &self.readout.w_out,
                    &self.act,
                    choice,
                    r,
                    learn_theta,
                    &mut self.batch.dw,
                    &mut self.batch.dtheta,
                );
                ((r * r).to_f64_lossy(), Some(reward))
            }
        };
        self.batch.count += 1;
        StepOutcome {
            loss,
            choice,
            correct,
            reward,
            coding_level,
        }
    }

    pub fn apply_batch(&mut self, config: &TrainerConfig, learn_local: bool) {
        self.batch
            .apply(&mut self.readout, T::of(config.eta_w), T::of(config.eta_theta), learn_local);
    }

    pub fn pending(&self) -> usize {
        self.batch.count()
    }
}

/// Tracks the running metrics of the network currently in charge and emits
/// a [`MetricsRecord`] every `log_interval` episodes.
#[derive(Debug, Clone)]
pub struct Monitor {
    algorithm: String,
    interval: usize,
    accuracy: WindowedMean,
    reward: WindowedMean,
    loss: WindowedMean,
    coding: WindowedMean,
    rounds: usize,
    accepted: usize,
    episode: usize,
    pub records: Vec<MetricsRecord>,
    pub correct_history: Vec<bool>,
}

impl Monitor {
    pub fn new(algorithm: impl Into<String>, config: &TrainerConfig) -> Self {
        Self {
            algorithm: algorithm.into(),
            interval: config.log_interval,
            accuracy: WindowedMean::new(config.accuracy_window),
            reward: WindowedMean::new(config.accuracy_window),
            loss: WindowedMean::new(config.accuracy_window),
            coding: WindowedMean::new(config.accuracy_window),
            rounds: 0,
            accepted: 0,
            episode: 0,
            records: Vec::new(),
            correct_history: Vec::new(),
        }
    }

    pub fn episode(&self) -> usize {
        self.episode
    }

    pub fn snapshot<T: Scalar>(&self, readout: &SparseReadout<T>) -> MetricsRecord {
        let stats = theta_stats(readout);
        MetricsRecord {
            episode: self.episode,
            algorithm: self.algorithm.clone(),
            accuracy_running_avg: self.accuracy.mean(),
            reward_running_avg: self.reward.mean(),
            loss_running_avg: self.loss.mean(),
            coding_level: self.coding.mean(),
            theta_mean: stats.mean,
            theta_std: stats.std,
            theta_g: readout.theta_global.to_f64_lossy(),
            acceptance_rate: (self.rounds > 0).then(|| self.accepted as f64 / self.rounds as f64),
        }
    }

    pub fn start<T: Scalar>(&mut self, readout: &SparseReadout<T>) {
        if self.records.is_empty() {
            let rec = self.snapshot(readout);
            self.records.push(rec);
        }
    }

    pub fn observe<T: Scalar>(&mut self, outcome: &StepOutcome, readout: &SparseReadout<T>) -> Result<()> {
        if !outcome.loss.is_finite() {
            return Err(Error::Training {
                episode: self.episode,
                message: format!("non-finite loss {}", outcome.loss),
            });
        }
        self.episode += 1;
        self.accuracy.push(if outcome.correct { 1.0 } else { 0.0 });
        if let Some(r) = outcome.reward {
            self.reward.push(r);
        }
        self.loss.push(outcome.loss);
        self.coding.push(outcome.coding_level);
        self.correct_history.push(outcome.correct);
        if self.episode.is_multiple_of(self.interval) {
            let rec = self.snapshot(readout);
            self.records.push(rec);
        }
        Ok(())
    }

    pub fn round(&mut self, accepted: bool) {
        self.rounds += 1;
        self.accepted += usize::from(accepted);
    }

    /// Emits a closing record unless the last episode already produced one.
    pub fn finish<T: Scalar>(&mut self, readout: &SparseReadout<T>) {
        if self.records.last().map(|r| r.episode) != Some(self.episode) {
            let rec = self.snapshot(readout);
            self.records.push(rec);
        }
    }

    pub fn final_accuracy(&self) -> Option<f64> {
        self.accuracy.mean()
    }

    pub fn final_reward(&self) -> Option<f64> {
        self.reward.mean()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.loss.mean()
    }

    pub fn final_coding_level(&self) -> Option<f64> {
        self.coding.mean()
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.rounds > 0).then(|| self.accepted as f64 / self.rounds as f64)
    }
}

/// Trained readout plus everything observed on the way.
#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub readout: SparseReadout<T>,
    pub monitor: Monitor,
    pub acceptances: Vec<AcceptanceRecord>,
    pub prelearn: Option<PrelearnOutcome>,
}

fn single_learner<T, S, R>(
    algorithm: Algorithm,
    readout: SparseReadout<T>,
    source: &mut S,
    n_episodes: usize,
    config: &TrainerConfig,
    feedback: Feedback,
    rng: &mut R,
) -> Result<TrainOutcome<T>>
where
    T: Scalar,
    S: EpisodeSource<T> + ?Sized,
    R: Rng + ?Sized,
{
    config.validate()?;
    let (mode, learn_local) = match algorithm {
        Algorithm::GdW => (ReadMode::Raw, false),
        Algorithm::GdTheta => (ReadMode::Thresholded, true),
        other => unreachable!("{other} is not a single-learner algorithm"),
    };
    let mut learner = Learner::new(readout);
    let mut monitor = Monitor::new(algorithm.name(), config);
    monitor.start(&learner.readout);
    for _ in 0..n_episodes {
        let p = source.next_presentation();
        let out = learner.observe(&p, mode, feedback, learn_local, config.temperature, rng);
        if learner.pending() == config.n_batch {
            learner.apply_batch(config, learn_local);
        }
        monitor.observe(&out, &learner.readout)?;
    }
    learner.apply_batch(config, learn_local);
    monitor.finish(&learner.readout);
    Ok(TrainOutcome {
        readout: learner.readout,
        monitor,
        acceptances: Vec::new(),
        prelearn: None,
    })
}

/// Gradient descent on `W_out` over the raw hidden state; thresholds are
/// ignored.
pub fn train_gd_w<T, S, R>(
    readout: SparseReadout<T>,
    source: &mut S,
    n_episodes: usize,
    config: &TrainerConfig,
    rng: &mut R,
) -> Result<TrainOutcome<T>>
where
    T: Scalar,
    S: EpisodeSource<T> + ?Sized,
    R: Rng + ?Sized,
{
    single_learner(Algorithm::GdW, readout, source, n_episodes, config, Feedback::Supervised, rng)
}

/// Joint descent on `W_out` and local thresholds; `theta_global` is frozen.
pub fn train_gd_theta<T, S, R>(
    readout: SparseReadout<T>,
    source: &mut S,
    n_episodes: usize,
    config: &TrainerConfig,
    rng: &mut R,
) -> Result<TrainOutcome<T>>
where
    T: Scalar,
    S: EpisodeSource<T> + ?Sized,
    R: Rng + ?Sized,
{
    single_learner(Algorithm::GdTheta, readout, source, n_episodes, config, Feedback::Supervised, rng)
}

/// Dispatches to the chosen algorithm under the given feedback.
#[allow(clippy::too_many_arguments)]
pub fn train<T, S, R>(
    algorithm: Algorithm,
    readout: SparseReadout<T>,
    source: &mut S,
    prelearn: Option<PrelearnPlan<'_, T>>,
    n_episodes: usize,
    config: &TrainerConfig,
    feedback: Feedback,
    rng: &mut R,
) -> Result<TrainOutcome<T>>
where
    T: Scalar,
    S: EpisodeSource<T> + ?Sized,
    R: Rng + ?Sized,
{
    match algorithm {
        Algorithm::GdW | Algorithm::GdTheta => {
            single_learner(algorithm, readout, source, n_episodes, config, feedback, rng)
        }
        Algorithm::Metropolis => {
            metropolis::run_dual(algorithm, readout, source, prelearn, n_episodes, config, feedback, false, rng)
        }
        Algorithm::Composed => {
            metropolis::run_dual(algorithm, readout, source, prelearn, n_episodes, config, feedback, true, rng)
        }
    }
}
