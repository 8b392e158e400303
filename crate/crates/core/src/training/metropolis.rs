//! Metropolis search over the global threshold, alone or composed with
//! gradient descent on the local thresholds.
//!
//! Two networks are kept alive: the current one (`minus`) and a proposal
//! (`plus`) whose global threshold is `theta_minus + sigma_m * N(0,1)`.
//! Both see the same episodes for `m_steps` episodes, each training its own
//! weights and keeping a running average of its loss; then the proposal
//! replaces the current network with probability
//! `min(1, exp(-beta * (cost_plus - cost_minus)))`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Algorithm, Feedback, Learner, Monitor, ReadMode, TrainOutcome, TrainerConfig};
use crate::error::{Error, Result};
use crate::readout::SparseReadout;
use crate::scalar::Scalar;
use crate::simulate::EpisodeSource;

/// Exponential moving average of the loss; seeded by the first observation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningCost {
    pub value: f64,
    pub initialized: bool,
}

impl RunningCost {
    pub fn update(&mut self, loss: f64, alpha_m: f64) {
        if self.initialized {
            self.value = (1.0 - alpha_m) * self.value + alpha_m * loss;
        } else {
            self.value = loss;
            self.initialized = true;
        }
    }
}

/// The current network and its proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCandidate<T> {
    pub minus: Learner<T>,
    pub plus: Learner<T>,
    /// Standard-normal draw behind the current proposal.
    pub nu: f64,
}

impl<T: Scalar> DualCandidate<T> {
    pub fn propose<R: Rng + ?Sized>(minus: Learner<T>, sigma_m: f64, rng: &mut R) -> Self {
        let mut dual = Self {
            plus: minus.clone(),
            minus,
            nu: 0.0,
        };
        dual.repropose(sigma_m, rng);
        dual
    }

    /// Replaces `plus` with a copy of `minus` whose global threshold is
    /// perturbed by `sigma_m * N(0,1)`.
    pub fn repropose<R: Rng + ?Sized>(&mut self, sigma_m: f64, rng: &mut R) {
        let nu: f64 = StandardNormal.sample(rng);
        self.plus = self.minus.clone();
        self.plus.readout.theta_global = self.minus.readout.theta_global + T::of(sigma_m * nu);
        self.nu = nu;
    }
}

pub fn acceptance_probability(delta: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return 1.0;
    }
    (-beta * delta).exp().min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRecord {
    /// Global episode count at the decision.
    pub episode: usize,
    pub theta_minus: f64,
    pub theta_plus: f64,
    pub cost_minus: f64,
    pub cost_plus: f64,
    pub probability: f64,
    pub accepted: bool,
}

/// Runs `n_steps` paired episodes and applies the acceptance rule. On
/// return `dual.minus` is the surviving network and `dual.plus` a fresh
/// proposal.
#[allow(clippy::too_many_arguments)]
pub fn metropolis_round<T, S, R>(
    dual: &mut DualCandidate<T>,
    source: &mut S,
    n_steps: usize,
    config: &TrainerConfig,
    feedback: Feedback,
    learn_local: bool,
    rng: &mut R,
    monitor: &mut Monitor,
) -> Result<AcceptanceRecord>
where
    T: Scalar,
    S: EpisodeSource<T> + ?Sized,
    R: Rng + ?Sized,
{
    for _ in 0..n_steps {
        let p = source.next_presentation();
        let out_minus = dual
            .minus
            .observe(&p, ReadMode::Thresholded, feedback, learn_local, config.temperature, rng);
        let out_plus = dual
            .plus
            .observe(&p, ReadMode::Thresholded, feedback, learn_local, config.temperature, rng);
        dual.minus.cost.update(out_minus.loss, config.alpha_m);
        dual.plus.cost.update(out_plus.loss, config.alpha_m);
        if dual.minus.pending() == config.n_batch {
            dual.minus.apply_batch(config, learn_local);
            dual.plus.apply_batch(config, learn_local);
        }
        monitor.observe(&out_minus, &dual.minus.readout)?;
    }
    dual.minus.apply_batch(config, learn_local);
    dual.plus.apply_batch(config, learn_local);

    let (cost_minus, cost_plus) = (dual.minus.cost.value, dual.plus.cost.value);
    let delta = cost_plus - cost_minus;
    if !delta.is_finite() {
        return Err(Error::Training {
            episode: monitor.episode(),
            message: format!("non-finite running cost (minus {cost_minus}, plus {cost_plus})"),
        });
    }
    let probability = acceptance_probability(delta, config.beta);
    let accepted = rng.random::<f64>() < probability;
    let record = AcceptanceRecord {
        episode: monitor.episode(),
        theta_minus: dual.minus.readout.theta_global.to_f64_lossy(),
        theta_plus: dual.plus.readout.theta_global.to_f64_lossy(),
        cost_minus,
        cost_plus,
        probability,
        accepted,
    };
    if accepted {
        std::mem::swap(&mut dual.minus, &mut dual.plus);
    }
    monitor.round(accepted);
    dual.repropose(config.sigma_m, rng);
    Ok(record)
}

/// Candidate starting values for the global threshold and the episodes
/// used to score them. `source` is called once per candidate so that every
/// candidate is scored on the same episode stream.
pub struct PrelearnPlan<'a, T> {
    pub candidates: Vec<T>,
    pub n_steps: usize,
    pub source: &'a dyn Fn() -> Box<dyn EpisodeSource<T> + 'a>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrelearnOutcome {
    pub candidates: Vec<f64>,
    /// Mean end-of-round running cost per candidate; empty when there was
    /// nothing to choose between.
    pub scores: Vec<f64>,
    pub chosen: f64,
}

/// Scores each candidate by running the dual scheme (with local learning
/// when `learn_local`) for `n_steps` episodes, restoring `W_out` and the global threshold after every
/// Metropolis decision, and returns the one with the lowest mean running
/// cost.
pub fn prelearn_theta_g<T, R>(
    plan: &PrelearnPlan<'_, T>,
    n_nodes: usize,
    n_class: usize,
    config: &TrainerConfig,
    feedback: Feedback,
    learn_local: bool,
    rng: &mut R,
) -> Result<PrelearnOutcome>
where
    T: Scalar,
    R: Rng + ?Sized,
{
    config.validate()?;
    let candidates: Vec<f64> = plan.candidates.iter().map(|c| c.to_f64_lossy()).collect();
    match plan.candidates.as_slice() {
        [] => return Err(Error::config("prelearn_candidates", "candidate list is empty")),
        [only] => {
            return Ok(PrelearnOutcome {
                candidates,
                scores: Vec::new(),
                chosen: only.to_f64_lossy(),
            })
        }
        _ => {}
    }
    let mut scores = Vec::with_capacity(plan.candidates.len());
    for &start in &plan.candidates {
        let mut source = (plan.source)();
        let mut monitor = Monitor::new("prelearn", config);
        let mut dual = DualCandidate::propose(Learner::new(SparseReadout::new(n_nodes, n_class, start)), config.sigma_m, rng);
        let mut remaining = plan.n_steps;
        let (mut total, mut rounds) = (0.0, 0usize);
        while remaining > 0 {
            let steps = remaining.min(config.m_steps);
            metropolis_round(&mut dual, source.as_mut(), steps, config, feedback, learn_local, rng, &mut monitor)?;
            remaining -= steps;
            total += dual.minus.cost.value;
            rounds += 1;
            dual.minus.readout.w_out.fill(T::zero());
            dual.minus.readout.theta_global = start;
            dual.minus.cost = RunningCost::default();
            dual.repropose(config.sigma_m, rng);
        }
        scores.push(if rounds == 0 { f64::INFINITY } else { total / rounds as f64 });
    }
    let best = scores
        .iter()
        .enumerate()
        .fold(0, |best, (k, &s)| if s < scores[best] { k } else { best });
    Ok(PrelearnOutcome {
        chosen: candidates[best],
        candidates,
        scores,
    })
}

#[allow(clippy::too_many_arguments)]
pub(super) fn run_dual<T, S, R>(
    algorithm: Algorithm,
    mut readout: SparseReadout<T>,
    source: &mut S,
    prelearn: Option<PrelearnPlan<'_, T>>,
    n_episodes: usize,
    config: &TrainerConfig,
    feedback: Feedback,
    learn_local: bool,
    rng: &mut R,
) -> Result<TrainOutcome<T>>
where
    T: Scalar,
    S: EpisodeSource<T> + ?Sized,
    R: Rng + ?Sized,
{
    config.validate()?;
    let prelearn = match prelearn {
        Some(plan) => {
            let outcome = prelearn_theta_g(&plan, readout.n_nodes(), readout.n_class(), config, feedback, learn_local, rng)?;
            readout.theta_global = T::of(outcome.chosen);
            Some(outcome)
        }
        None => None,
    };
    let mut monitor = Monitor::new(algorithm.name(), config);
    monitor.start(&readout);
    let mut dual = DualCandidate::propose(Learner::new(readout), config.sigma_m, rng);
    let mut acceptances = Vec::new();
    let mut remaining = n_episodes;
    while remaining > 0 {
        let steps = remaining.min(config.m_steps);
        let record = metropolis_round(&mut dual, source, steps, config, feedback, learn_local, rng, &mut monitor)?;
        acceptances.push(record);
        remaining -= steps;
    }
    monitor.finish(&dual.minus.readout);
    Ok(TrainOutcome {
        readout: dual.minus.readout,
        monitor,
        acceptances,
        prelearn,
    })
}

/// Global-threshold Metropolis search; local thresholds stay untouched.
pub fn train_metropolis<T, S, R>(
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
    run_dual(
        Algorithm::Metropolis,
        readout,
        source,
        None,
        n_episodes,
        config,
        Feedback::Supervised,
        false,
        rng,
    )
}

/// Optional prelearning, then Metropolis on the global threshold with
/// gradient descent on weights and local thresholds inside every round.
pub fn train_composed<T, S, R>(
    readout: SparseReadout<T>,
    source: &mut S,
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
    run_dual(
        Algorithm::Composed,
        readout,
        source,
        prelearn,
        n_episodes,
        config,
        Feedback::Supervised,
        true,
        rng,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::ReservoirState;
    use crate::simulate::{Presentation, ReplaySource};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn source() -> ReplaySource<f64> {
        ReplaySource::new(
            vec![
                Presentation {
                    state: ReservoirState { v: vec![0.9, 0.3, 0.5] },
                    label: 0,
                    item: 0,
                },
                Presentation {
                    state: ReservoirState { v: vec![0.2, 0.8, 0.4] },
                    label: 1,
                    item: 1,
                },
            ],
            2,
        )
    }

    #[test]
    fn acceptance_probability_limits() {
        assert_eq!(acceptance_probability(0.0, 4.0), 1.0);
        assert_eq!(acceptance_probability(-0.5, 4.0), 1.0);
        assert_eq!(acceptance_probability(3.0, 0.0), 1.0);
        assert!((acceptance_probability(0.5, 4.0) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn running_cost_starts_at_first_loss() {
        let mut c = RunningCost::default();
        c.update(0.8, 0.01);
        assert_eq!(c.value, 0.8);
        c.update(0.0, 0.5);
        assert_eq!(c.value, 0.4);
    }

    #[test]
    fn proposal_is_recorded_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dual = DualCandidate::propose(Learner::new(SparseReadout::<f64>::new(3, 2, 0.2)), 0.05, &mut rng);
        let expected = 0.2 + 0.05 * dual.nu;
        assert_eq!(dual.plus.readout.theta_global, expected);
        assert_eq!(dual.plus.readout.w_out, dual.minus.readout.w_out);
    }

    #[test]
    fn frozen_proposal_keeps_threshold() {
        let config = TrainerConfig {
            sigma_m: 0.0,
            eta_w: 0.05,
            m_steps: 10,
            ..TrainerConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = train_metropolis(SparseReadout::<f64>::new(3, 2, 0.25), &mut source(), 200, &config, &mut rng).unwrap();
        assert_eq!(out.readout.theta_global, 0.25);
        assert!(out.acceptances.iter().all(|a| a.theta_plus == 0.25));
        assert_eq!(out.acceptances.len(), 20);
    }

    #[test]
    fn single_prelearn_candidate_is_returned() {
        let make = || Box::new(source()) as Box<dyn EpisodeSource<f64>>;
        let plan = PrelearnPlan {
            candidates: vec![0.4],
            n_steps: 1000,
            source: &make,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = prelearn_theta_g(&plan, 3, 2, &TrainerConfig::default(), Feedback::Supervised, true, &mut rng).unwrap();
        assert_eq!(out.chosen, 0.4);
        let empty = PrelearnPlan {
            candidates: vec![],
            n_steps: 10,
            source: &make,
        };
        assert!(prelearn_theta_g(&empty, 3, 2, &TrainerConfig::default(), Feedback::Supervised, true, &mut rng).is_err());
    }
}
