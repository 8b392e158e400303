//! Runs every (replica, algorithm) arm of an experiment.
//!
//! Within a replica all arms share the reservoir, the task and the episode
//! stream, so their results are paired. Seeds come from [`SeedTree`] with
//! the replica index and, for per-arm streams, the algorithm index.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{theta_stats, ActivityCounts, MetricsRecord};
use crate::readout::{SparseActivation, SparseReadout};
use crate::reservoir::{Reservoir, ReservoirState};
use crate::scalar::Scalar;
use crate::seed::{Purpose, SeedTree, SHARED_ARM};
use crate::simulate::{run_episode, EpisodeSource, Simulator};
use crate::tasks::{load_stimulus_set, make_sequence_task, make_static_task, synth_stimulus_set, StimulusSet, Task};
use crate::training::{train, AcceptanceRecord, Algorithm, Feedback, PrelearnOutcome, PrelearnPlan};

use super::checkpoint::{Checkpoint, ReservoirHeader, CHECKPOINT_VERSION};
use super::config::{ExperimentConfig, Precision};

/// End-of-training figures for one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub episodes: usize,
    pub final_accuracy: Option<f64>,
    pub final_reward: Option<f64>,
    pub final_loss: Option<f64>,
    /// Mean coding level over the last accuracy window of training.
    pub coding_level: Option<f64>,
    pub theta_mean: f64,
    pub theta_std: f64,
    pub theta_g: f64,
    pub acceptance_rate: Option<f64>,
    /// Mean specificity on held-out episodes with the starting readout
    /// (after prelearning, when there is one) and with the trained one.
    pub specificity_before: Option<f64>,
    pub specificity_after: Option<f64>,
    /// Ten-bin histogram of per-node specificity after training.
    pub specificity_histogram: Vec<u64>,
    /// Coding level of the trained readout on the held-out episodes.
    pub eval_coding_level: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmRecord {
    pub algorithm: Algorithm,
    pub replica: usize,
    pub metrics: Vec<MetricsRecord>,
    pub summary: ArmSummary,
    pub prelearn: Option<PrelearnOutcome>,
    pub acceptances: Vec<AcceptanceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    /// Sorted by replica, then algorithm.
    pub arms: Vec<ArmRecord>,
}

impl RunRecord {
    pub fn arm(&self, algorithm: Algorithm, replica: usize) -> Option<&ArmRecord> {
        self.arms
            .iter()
            .find(|a| a.algorithm == algorithm && a.replica == replica)
    }

    /// One summary per replica for `algorithm`, in replica order.
    pub fn summaries(&self, algorithm: Algorithm) -> Vec<&ArmSummary> {
        self.arms
            .iter()
            .filter(|a| a.algorithm == algorithm)
            .map(|a| &a.summary)
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(file), self).map_err(|e| Error::Format {
            what: "run record",
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            what: "run record",
            message: format!("{}: {e}", path.display()),
        })
    }
}

/// Where the files of a written run live.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunPaths {
    pub dir: PathBuf,
    pub config: PathBuf,
    pub metrics: PathBuf,
    pub record: PathBuf,
    pub summary: PathBuf,
    pub checkpoints: PathBuf,
}

impl RunPaths {
    pub fn new(dir: PathBuf) -> Self {
        Self {
            config: dir.join("config.json"),
            metrics: dir.join("metrics.jsonl"),
            record: dir.join("record.json"),
            summary: dir.join("summary.csv"),
            checkpoints: dir.join("checkpoints"),
            dir,
        }
    }
}

#[derive(Serialize)]
struct MetricsLine<'a> {
    replica: usize,
    #[serde(flatten)]
    record: &'a MetricsRecord,
}

/// Append-only metrics stream shared by concurrently finishing arms.
struct MetricsSink {
    out: Mutex<BufWriter<fs::File>>,
    path: PathBuf,
}

impl MetricsSink {
    fn create(path: &Path) -> Result<Self> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            out: Mutex::new(BufWriter::new(file)),
            path: path.to_path_buf(),
        })
    }

    fn write_arm(&self, arm: &ArmRecord) -> Result<()> {
        let mut out = self.out.lock().expect("metrics sink poisoned");
        for record in &arm.metrics {
            let line = MetricsLine {
                replica: arm.replica,
                record,
            };
            serde_json::to_writer(&mut *out, &line).map_err(|e| Error::Format {
                what: "metrics",
                message: e.to_string(),
            })?;
            out.write_all(b"\n").map_err(|e| Error::io(&self.path, e))?;
        }
        out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Runs the experiment and writes config, metrics stream, record, summary
/// and checkpoints under [`ExperimentConfig::run_dir`].
pub fn run_experiment(config: &ExperimentConfig) -> Result<(RunRecord, RunPaths)> {
    let paths = RunPaths::new(config.run_dir());
    run_experiment_in(config, &paths)
}

pub fn run_experiment_in(config: &ExperimentConfig, paths: &RunPaths) -> Result<(RunRecord, RunPaths)> {
    config.validate()?;
    fs::create_dir_all(&paths.dir).map_err(|e| Error::io(&paths.dir, e))?;
    if config.checkpoints {
        fs::create_dir_all(&paths.checkpoints).map_err(|e| Error::io(&paths.checkpoints, e))?;
    }
    let snapshot = serde_json::to_string_pretty(config).expect("config serializes");
    fs::write(&paths.config, snapshot).map_err(|e| Error::io(&paths.config, e))?;
    let sink = MetricsSink::create(&paths.metrics)?;
    let outputs = Outputs {
        sink: Some(&sink),
        checkpoints: config.checkpoints.then_some(paths.checkpoints.as_path()),
    };
    let record = match config.precision {
        Precision::F64 => execute_with::<f64>(config, outputs)?,
        Precision::F32 => execute_with::<f32>(config, outputs)?,
    };
    record.save(&paths.record)?;
    super::report::write_summary_csv(&record, &paths.summary)?;
    Ok((record, paths.clone()))
}

/// Runs the experiment without touching the filesystem (beyond reading a
/// stimulus file, if one is configured).
pub fn execute(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let outputs = Outputs {
        sink: None,
        checkpoints: None,
    };
    match config.precision {
        Precision::F64 => execute_with::<f64>(config, outputs),
        Precision::F32 => execute_with::<f32>(config, outputs),
    }
}

#[derive(Clone, Copy)]
struct Outputs<'a> {
    sink: Option<&'a MetricsSink>,
    checkpoints: Option<&'a Path>,
}

/// Everything a replica's arms share.
struct ReplicaSetup<T> {
    replica: usize,
    reservoir: Reservoir<T>,
    task: Task<T>,
    /// Held-out decision-time states for specificity.
    eval: Vec<(ReservoirState<T>, usize)>,
    candidates: Option<Vec<T>>,
}

fn stimulus_set<T: Scalar>(config: &ExperimentConfig, tree: &SeedTree) -> Result<StimulusSet<T>> {
    let t = &config.task_params;
    match &t.stimuli_path {
        Some(path) => load_stimulus_set(path, config.reservoir.n_inputs),
        None => synth_stimulus_set(
            t.n_synthetic,
            config.reservoir.n_inputs,
            t.surrogate_log_sigma,
            &mut tree.rng(0, SHARED_ARM, Purpose::Stimuli),
        ),
    }
}

pub(crate) fn build_replica<T: Scalar>(
    config: &ExperimentConfig,
    tree: &SeedTree,
    set: &Arc<StimulusSet<T>>,
    replica: usize,
) -> Result<(Reservoir<T>, Task<T>)> {
    let r = replica as u32;
    let mut params = config.reservoir.clone();
    params.seed = tree.seed(r, SHARED_ARM, Purpose::Reservoir);
    let reservoir = Reservoir::build(params)?;
    let t = &config.task_params;
    let mut rng = tree.rng(r, SHARED_ARM, Purpose::Task);
    let task = if config.task.is_sequence() {
        Task::Sequence(make_sequence_task(
            Arc::clone(set),
            t.n_base,
            t.n_class,
            t.sigma,
            t.element_steps(),
            &mut rng,
        )?)
    } else {
        Task::Static(make_static_task(
            Arc::clone(set),
            t.n_stimuli,
            t.n_class,
            t.sigma,
            t.decision_steps(),
            &mut rng,
        )?)
    };
    Ok((reservoir, task))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Candidate starting thresholds: the configured list, or quantiles of the
/// decision-time hidden activity over a few pilot episodes.
fn prelearn_candidates<T: Scalar>(
    config: &ExperimentConfig,
    tree: &SeedTree,
    reservoir: &Reservoir<T>,
    task: &Task<T>,
    replica: usize,
) -> Vec<T> {
    let p = &config.prelearn;
    if !p.candidates.is_empty() {
        return p.candidates.iter().map(|&c| T::of(c)).collect();
    }
    let mut sim = Simulator::new(reservoir, task, tree.rng(replica as u32, SHARED_ARM, Purpose::Pilot));
    let mut values = Vec::with_capacity(p.pilot_episodes * reservoir.n_nodes());
    for _ in 0..p.pilot_episodes {
        values.extend(sim.next_presentation().state.v.iter().map(|v| v.to_f64_lossy()));
    }
    values.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = p.quantiles.iter().map(|&q| quantile(&values, q)).collect();
    out.dedup();
    out.into_iter().map(T::of).collect()
}

fn uses_prelearn(config: &ExperimentConfig, algorithm: Algorithm) -> bool {
    match algorithm {
        Algorithm::Composed => true,
        Algorithm::Metropolis => config.prelearn.for_metropolis,
        _ => false,
    }
}

fn setup_replica<T: Scalar>(
    config: &ExperimentConfig,
    tree: &SeedTree,
    set: &Arc<StimulusSet<T>>,
    replica: usize,
) -> Result<ReplicaSetup<T>> {
    let (reservoir, task) = build_replica(config, tree, set, replica)?;
    let mut eval_rng = tree.rng(replica as u32, SHARED_ARM, Purpose::Evaluation);
    let eval = (0..config.eval_episodes)
        .map(|_| {
            let e = task.draw_episode(&mut eval_rng);
            (run_episode(&reservoir, &task, &e), e.label)
        })
        .collect();
    let candidates = config
        .algorithms
        .iter()
        .any(|&a| uses_prelearn(config, a))
        .then(|| prelearn_candidates(config, tree, &reservoir, &task, replica));
    Ok(ReplicaSetup {
        replica,
        reservoir,
        task,
        eval,
        candidates,
    })
}

fn execute_with<T: Scalar>(config: &ExperimentConfig, outputs: Outputs<'_>) -> Result<RunRecord> {
    let tree = SeedTree::new(config.seed);
    let set = Arc::new(stimulus_set::<T>(config, &tree)?);
    let setups = (0..config.n_replicas)
        .into_par_iter()
        .map(|r| setup_replica(config, &tree, &set, r))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, Algorithm)> = setups
        .iter()
        .flat_map(|s| config.algorithms.iter().map(move |&a| (s.replica, a)))
        .collect();
    let mut arms = jobs
        .into_par_iter()
        .map(|(r, algorithm)| {
            let arm = run_arm(config, &tree, &setups[r], algorithm, outputs)?;
            if let Some(sink) = outputs.sink {
                sink.write_arm(&arm)?;
            }
            Ok(arm)
        })
        .collect::<Result<Vec<_>>>()?;
    arms.sort_by_key(|a| (a.replica, a.algorithm));
    Ok(RunRecord {
        config: config.clone(),
        arms,
    })
}

/// Specificity and coding level of `readout` over the held-out states; the
/// benchmark reads the raw state, every other arm the thresholded one.
fn evaluate<T: Scalar>(
    readout: &SparseReadout<T>,
    raw: bool,
    eval: &[(ReservoirState<T>, usize)],
) -> Result<Option<(f64, Vec<u64>, f64)>> {
    if eval.is_empty() {
        return Ok(None);
    }
    let mut counts = ActivityCounts::new(readout.n_nodes(), readout.n_class());
    let mut act = SparseActivation::empty(readout.n_nodes());
    let mut coding = 0.0;
    for (state, label) in eval {
        if raw {
            act.set_raw(&state.v);
        } else {
            readout.activate_into(&state.v, &mut act);
        }
        coding += act.coding_level();
        counts.tally_activity(&act, *label)?;
    }
    let rep = counts.specificity()?;
    Ok(Some((rep.mean_sp(), rep.histogram(10), coding / eval.len() as f64)))
}

fn run_arm<T: Scalar>(
    config: &ExperimentConfig,
    tree: &SeedTree,
    setup: &ReplicaSetup<T>,
    algorithm: Algorithm,
    outputs: Outputs<'_>,
) -> Result<ArmRecord> {
    let replica = setup.replica as u32;
    let trainer = config.trainer_for(algorithm);
    let n_nodes = setup.reservoir.n_nodes();
    let n_class = setup.task.n_class();
    let start = SparseReadout::new(n_nodes, n_class, T::of(config.theta_init));
    let mut source = Simulator::new(
        &setup.reservoir,
        &setup.task,
        tree.rng(replica, SHARED_ARM, Purpose::Episodes),
    );
    let mut rng = tree.rng(replica, algorithm.index(), Purpose::Decisions);
    let feedback = if config.task.is_bandit() {
        Feedback::Bandit(config.bandit)
    } else {
        Feedback::Supervised
    };

    let make_source = || {
        Box::new(Simulator::new(
            &setup.reservoir,
            &setup.task,
            tree.rng(replica, SHARED_ARM, Purpose::Prelearn),
        )) as Box<dyn EpisodeSource<T> + '_>
    };
    let plan = match (&setup.candidates, uses_prelearn(config, algorithm)) {
        (Some(candidates), true) => Some(PrelearnPlan {
            candidates: candidates.clone(),
            n_steps: config.prelearn.steps / candidates.len().max(1),
            source: &make_source,
        }),
        _ => None,
    };

    let outcome = train(algorithm, start.clone(), &mut source, plan, config.n_episodes, &trainer, feedback, &mut rng)
        .map_err(|e| match e {
            Error::Training { episode, message } => Error::Training {
                episode,
                message: format!("{algorithm}, replica {replica}: {message}"),
            },
            other => other,
        })?;

    let raw = algorithm == Algorithm::GdW;
    let mut initial = start;
    if let Some(p) = &outcome.prelearn {
        initial.theta_global = T::of(p.chosen);
    }
    let before = evaluate(&initial, raw, &setup.eval)?;
    let after = evaluate(&outcome.readout, raw, &setup.eval)?;
    let stats = theta_stats(&outcome.readout);
    let m = &outcome.monitor;
    let summary = ArmSummary {
        episodes: m.episode(),
        final_accuracy: m.final_accuracy(),
        final_reward: m.final_reward(),
        final_loss: m.final_loss(),
        coding_level: m.final_coding_level(),
        theta_mean: stats.mean,
        theta_std: stats.std,
        theta_g: outcome.readout.theta_global.to_f64_lossy(),
        acceptance_rate: m.acceptance_rate(),
        specificity_before: before.as_ref().map(|b| b.0),
        specificity_after: after.as_ref().map(|a| a.0),
        specificity_histogram: after.as_ref().map(|a| a.1.clone()).unwrap_or_default(),
        eval_coding_level: after.as_ref().map(|a| a.2),
    };

    if let Some(dir) = outputs.checkpoints {
        let ck = Checkpoint {
            version: CHECKPOINT_VERSION,
            run: config.name.clone(),
            task: config.task,
            precision: config.precision,
            algorithm,
            replica: setup.replica,
            episodes: m.episode(),
            reservoir: ReservoirHeader::of(&setup.reservoir),
            readout: outcome.readout.clone(),
            rng,
        };
        ck.save(&dir.join(format!("{}-r{}.json", algorithm.name(), setup.replica)))?;
    }

    Ok(ArmRecord {
        algorithm,
        replica: setup.replica,
        metrics: outcome.monitor.records,
        summary,
        prelearn: outcome.prelearn,
        acceptances: outcome.acceptances,
    })
}
