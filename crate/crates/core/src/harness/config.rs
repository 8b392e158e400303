//! Experiment configuration: a flat TOML table, command-line overrides, and
//! the per-task defaults of the two shipped presets.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reservoir::ReservoirParams;
use crate::rl::BanditEnv;
use crate::tasks::{steps_for, DEFAULT_CHANNELS, DEFAULT_DT};
use crate::training::{Algorithm, TrainerConfig};

/// Environment variable naming the directory runs are written under.
pub const OUTPUT_ROOT_ENV: &str = "SPARSE_ESN_OUTPUT";

/// Size of the surrogate stimulus table when no file is given and the task
/// needs fewer stimuli.
pub const SURROGATE_STIMULI: usize = 110;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Static,
    Sequence,
    BanditStatic,
    BanditSequence,
}

impl TaskKind {
    pub fn is_sequence(self) -> bool {
        matches!(self, TaskKind::Sequence | TaskKind::BanditSequence)
    }

    pub fn is_bandit(self) -> bool {
        matches!(self, TaskKind::BanditStatic | TaskKind::BanditSequence)
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Static => "static",
            TaskKind::Sequence => "sequence",
            TaskKind::BanditStatic => "bandit-static",
            TaskKind::BanditSequence => "bandit-sequence",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            TaskKind::Static,
            TaskKind::Sequence,
            TaskKind::BanditStatic,
            TaskKind::BanditSequence,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::config("task", format!("unknown task {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Full network and episode budget.
    Paper,
    /// Smaller network and budget for quick comparisons.
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

/// The file format: every key optional, unknown keys rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub name: Option<String>,
    pub preset: Option<Preset>,
    pub task: Option<TaskKind>,
    pub algorithms: Option<Vec<Algorithm>>,
    pub precision: Option<Precision>,
    pub seed: Option<u64>,
    pub n_episodes: Option<usize>,
    pub n_replicas: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub checkpoints: Option<bool>,

    pub n_nodes: Option<usize>,
    pub n_inputs: Option<usize>,
    pub alpha: Option<f64>,
    pub rho: Option<f64>,
    pub recurrent_density: Option<f64>,
    pub mean_in_degree: Option<f64>,
    pub in_degree_sigma: Option<f64>,
    pub input_scale: Option<f64>,
    pub signed_recurrent: Option<bool>,

    pub n_class: Option<usize>,
    pub n_stimuli: Option<usize>,
    pub n_base: Option<usize>,
    pub sigma: Option<f64>,
    pub decision_time: Option<f64>,
    pub element_time: Option<f64>,
    pub dt: Option<f64>,
    pub stimuli_path: Option<PathBuf>,
    pub n_synthetic: Option<usize>,
    pub surrogate_log_sigma: Option<f64>,

    pub eta_w: Option<f64>,
    pub eta_theta: Option<f64>,
    pub n_batch: Option<usize>,
    pub n_batch_gd_w: Option<usize>,
    pub sigma_m: Option<f64>,
    pub m_steps: Option<usize>,
    pub beta: Option<f64>,
    pub alpha_m: Option<f64>,
    pub temperature: Option<f64>,
    pub log_interval: Option<usize>,
    pub accuracy_window: Option<usize>,

    pub theta_init: Option<f64>,
    pub prelearn_steps: Option<usize>,
    pub prelearn_candidates: Option<Vec<f64>>,
    pub prelearn_quantiles: Option<Vec<f64>>,
    pub pilot_episodes: Option<usize>,
    pub metropolis_prelearn: Option<bool>,
    pub eval_episodes: Option<usize>,

    pub reward_correct: Option<f64>,
    pub reward_wrong: Option<f64>,
}

const KNOWN_KEYS: &[&str] = &[
    "name",
    "preset",
    "task",
    "algorithms",
    "precision",
    "seed",
    "n_episodes",
    "n_replicas",
    "output_dir",
    "checkpoints",
    "n_nodes",
    "n_inputs",
    "alpha",
    "rho",
    "recurrent_density",
    "mean_in_degree",
    "in_degree_sigma",
    "input_scale",
    "signed_recurrent",
    "n_class",
    "n_stimuli",
    "n_base",
    "sigma",
    "decision_time",
    "element_time",
    "dt",
    "stimuli_path",
    "n_synthetic",
    "surrogate_log_sigma",
    "eta_w",
    "eta_theta",
    "n_batch",
    "n_batch_gd_w",
    "sigma_m",
    "m_steps",
    "beta",
    "alpha_m",
    "temperature",
    "log_interval",
    "accuracy_window",
    "theta_init",
    "prelearn_steps",
    "prelearn_candidates",
    "prelearn_quantiles",
    "pilot_episodes",
    "metropolis_prelearn",
    "eval_episodes",
    "reward_correct",
    "reward_wrong",
];

impl ConfigFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("config", e.message().to_string()))?;
        Self::from_table(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        for key in table.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::config(key.clone(), "unknown key"));
            }
        }
        // Deserialize key by key so a type error names its key.
        for (key, value) in &table {
            let mut single = toml::Table::new();
            single.insert(key.clone(), value.clone());
            single
                .try_into::<ConfigFile>()
                .map_err(|e| Error::config(key.clone(), e.message().trim().to_string()))?;
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("config", e.message().to_string()))
    }

    /// Applies `key=value` overrides. Values are read as TOML literals,
    /// falling back to a bare string (so `task=sequence` works unquoted).
    pub fn with_overrides<S: AsRef<str>>(self, overrides: &[S]) -> Result<Self> {
        let mut table = toml::Table::try_from(&self)
            .map_err(|e| Error::config("config", e.to_string()))?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::config(item, "override must look like key=value"))?;
            let key = key.trim();
            let raw = raw.trim();
            let value = format!("v = {raw}")
                .parse::<toml::Table>()
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.to_string()));
            table.insert(key.to_string(), value);
        }
        Self::from_table(table)
    }
}

/// Task-construction parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskParams {
    pub n_class: usize,
    pub n_stimuli: usize,
    pub n_base: usize,
    pub sigma: f64,
    /// Decision time in seconds.
    pub decision_time: f64,
    /// Duration of one sequence element in seconds.
    pub element_time: f64,
    pub dt: f64,
    pub stimuli_path: Option<PathBuf>,
    /// Rows of the surrogate table when no file is given.
    pub n_synthetic: usize,
    /// Log-space std of the surrogate rates.
    pub surrogate_log_sigma: f64,
}

impl TaskParams {
    pub fn decision_steps(&self) -> usize {
        steps_for(self.decision_time, self.dt)
    }

    pub fn element_steps(&self) -> usize {
        steps_for(self.element_time, self.dt)
    }
}

/// How the composed algorithm picks its starting global threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrelearnParams {
    /// Total prelearning episodes, split evenly across candidates.
    pub steps: usize,
    /// Explicit candidates; when empty, candidates are quantiles of the
    /// hidden activity measured over `pilot_episodes`.
    pub candidates: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub pilot_episodes: usize,
    /// Also prelearn the starting threshold of plain Metropolis.
    pub for_metropolis: bool,
}

/// A fully resolved and validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub preset: Preset,
    pub task: TaskKind,
    pub algorithms: Vec<Algorithm>,
    pub precision: Precision,
    pub seed: u64,
    pub n_episodes: usize,
    pub n_replicas: usize,
    pub output_dir: Option<PathBuf>,
    pub checkpoints: bool,
    /// `seed` is replaced per replica.
    pub reservoir: ReservoirParams,
    pub task_params: TaskParams,
    /// `n_batch` applies to every algorithm except `gd_w`.
    pub trainer: TrainerConfig,
    pub n_batch_gd_w: usize,
    /// Starting global threshold (all local thresholds start at zero).
    pub theta_init: f64,
    pub prelearn: PrelearnParams,
    /// Episodes used to measure specificity before and after training.
    pub eval_episodes: usize,
    pub bandit: BanditEnv,
}

impl ExperimentConfig {
    /// Defaults for `task` under `preset` with nothing overridden.
    pub fn defaults(task: TaskKind, preset: Preset) -> Self {
        let seq = task.is_sequence();
        let (n_nodes, n_episodes, n_replicas) = match preset {
            Preset::Paper => (1000, 60_000, 1),
            Preset::Desk => (500, 20_000, 5),
        };
        let m_steps = 100;
        Self {
            name: format!("{task}-{}", if preset == Preset::Paper { "paper" } else { "desk" }),
            preset,
            task,
            algorithms: Algorithm::ALL.to_vec(),
            precision: Precision::F64,
            seed: 1,
            n_episodes,
            n_replicas,
            output_dir: None,
            checkpoints: true,
            reservoir: ReservoirParams {
                n_nodes,
                n_inputs: DEFAULT_CHANNELS,
                alpha: if seq { 0.1 } else { 0.025 },
                rho: if seq { 0.95 } else { 0.8 },
                ..ReservoirParams::default()
            },
            task_params: TaskParams {
                n_class: 2,
                n_stimuli: 140,
                n_base: 5,
                sigma: if seq { 0.2 } else { 0.3 },
                decision_time: if seq { 0.3 } else { 0.5 },
                element_time: 0.1,
                dt: DEFAULT_DT,
                stimuli_path: None,
                n_synthetic: SURROGATE_STIMULI.max(140),
                surrogate_log_sigma: 1.0,
            },
            trainer: TrainerConfig {
                n_batch: if seq { 10 } else { 1 },
                m_steps,
                alpha_m: 1.0 / m_steps as f64,
                log_interval: 1000,
                accuracy_window: 1000,
                ..TrainerConfig::default()
            },
            n_batch_gd_w: 100,
            theta_init: 0.0,
            prelearn: PrelearnParams {
                steps: 10_000,
                candidates: Vec::new(),
                quantiles: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
                pilot_episodes: 200,
                for_metropolis: false,
            },
            eval_episodes: 2000,
            bandit: BanditEnv::default(),
        }
    }

    /// Fills defaults for the file's task and preset, then applies every
    /// key the file sets.
    pub fn resolve(file: &ConfigFile) -> Result<Self> {
        let task = file.task.unwrap_or(TaskKind::Static);
        let preset = file.preset.unwrap_or(Preset::Paper);
        let mut c = Self::defaults(task, preset);
        macro_rules! set {
            ($($src:ident => $($dst:ident).+),* $(,)?) => {
                $(if let Some(v) = file.$src.clone() { c.$($dst).+ = v; })*
            };
        }
        set!(
            name => name,
            algorithms => algorithms,
            precision => precision,
            seed => seed,
            n_episodes => n_episodes,
            n_replicas => n_replicas,
            checkpoints => checkpoints,
            n_nodes => reservoir.n_nodes,
            n_inputs => reservoir.n_inputs,
            alpha => reservoir.alpha,
            rho => reservoir.rho,
            recurrent_density => reservoir.recurrent_density,
            mean_in_degree => reservoir.mean_in_degree,
            in_degree_sigma => reservoir.in_degree_sigma,
            input_scale => reservoir.input_scale,
            signed_recurrent => reservoir.signed_recurrent,
            n_class => task_params.n_class,
            n_stimuli => task_params.n_stimuli,
            n_base => task_params.n_base,
            sigma => task_params.sigma,
            decision_time => task_params.decision_time,
            element_time => task_params.element_time,
            dt => task_params.dt,
            eta_w => trainer.eta_w,
            eta_theta => trainer.eta_theta,
            n_batch => trainer.n_batch,
            n_batch_gd_w => n_batch_gd_w,
            sigma_m => trainer.sigma_m,
            beta => trainer.beta,
            temperature => trainer.temperature,
            log_interval => trainer.log_interval,
            accuracy_window => trainer.accuracy_window,
            theta_init => theta_init,
            surrogate_log_sigma => task_params.surrogate_log_sigma,
            prelearn_steps => prelearn.steps,
            prelearn_candidates => prelearn.candidates,
            prelearn_quantiles => prelearn.quantiles,
            pilot_episodes => prelearn.pilot_episodes,
            metropolis_prelearn => prelearn.for_metropolis,
            eval_episodes => eval_episodes,
            reward_correct => bandit.reward_correct,
            reward_wrong => bandit.reward_wrong,
        );
        if file.output_dir.is_some() {
            c.output_dir = file.output_dir.clone();
        }
        if file.stimuli_path.is_some() {
            c.task_params.stimuli_path = file.stimuli_path.clone();
        }
        c.task_params.n_synthetic = file
            .n_synthetic
            .unwrap_or_else(|| SURROGATE_STIMULI.max(c.task_params.n_stimuli));
        // The running-cost rate follows M unless set explicitly.
        if let Some(m) = file.m_steps {
            c.trainer.m_steps = m;
            c.trainer.alpha_m = 1.0 / m.max(1) as f64;
        }
        if let Some(a) = file.alpha_m {
            c.trainer.alpha_m = a;
        }
        if c.task.is_sequence() && file.decision_time.is_none() {
            c.task_params.decision_time = 3.0 * c.task_params.element_time;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.reservoir.validate()?;
        if !(self.reservoir.rho < 1.0) {
            return Err(Error::config(
                "rho",
                format!("{} breaks the echo-state condition (must be < 1)", self.reservoir.rho),
            ));
        }
        self.trainer.validate()?;
        if self.algorithms.is_empty() {
            return Err(Error::config("algorithms", "at least one algorithm is required"));
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return Err(Error::config("algorithms", "duplicate algorithm"));
        }
        if self.n_replicas == 0 {
            return Err(Error::config("n_replicas", "must be at least 1"));
        }
        if self.n_replicas > 1 << 20 {
            return Err(Error::config("n_replicas", "too many replicas for the seed layout"));
        }
        if self.n_batch_gd_w == 0 {
            return Err(Error::config("n_batch_gd_w", "must be at least 1"));
        }
        let t = &self.task_params;
        if t.n_class < 2 {
            return Err(Error::config("n_class", "need at least 2 classes"));
        }
        if t.n_stimuli == 0 {
            return Err(Error::config("n_stimuli", "must be at least 1"));
        }
        if t.n_base == 0 {
            return Err(Error::config("n_base", "must be at least 1"));
        }
        if !(t.sigma >= 0.0 && t.sigma.is_finite()) {
            return Err(Error::config("sigma", format!("{} must be nonnegative", t.sigma)));
        }
        if !(t.dt > 0.0 && t.dt.is_finite()) {
            return Err(Error::config("dt", "must be positive"));
        }
        if t.decision_steps() == 0 {
            return Err(Error::config("decision_time", "shorter than one step"));
        }
        if self.task.is_sequence() {
            if t.element_steps() == 0 {
                return Err(Error::config("element_time", "shorter than one step"));
            }
            if t.decision_steps() != 3 * t.element_steps() {
                return Err(Error::config(
                    "decision_time",
                    "sequence decisions happen at the end of the third element",
                ));
            }
        }
        if !(self.theta_init.is_finite()) {
            return Err(Error::config("theta_init", "must be finite"));
        }
        let p = &self.prelearn;
        if p.candidates.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("prelearn_candidates", "must be finite"));
        }
        if p.candidates.is_empty() {
            if p.quantiles.is_empty() {
                return Err(Error::config("prelearn_quantiles", "need candidates or quantiles"));
            }
            if p.quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
                return Err(Error::config("prelearn_quantiles", "quantiles must lie in [0, 1]"));
            }
            if p.pilot_episodes == 0 {
                return Err(Error::config("pilot_episodes", "must be at least 1"));
            }
        }
        let b = &self.bandit;
        if !(b.reward_correct.is_finite() && b.reward_wrong.is_finite()) {
            return Err(Error::config("reward_correct", "rewards must be finite"));
        }
        Ok(())
    }

    /// Trainer settings for one algorithm (the benchmark has its own batch).
    pub fn trainer_for(&self, algorithm: Algorithm) -> TrainerConfig {
        let mut t = self.trainer.clone();
        if algorithm == Algorithm::GdW {
            t.n_batch = self.n_batch_gd_w;
        }
        t
    }

    /// Where this run writes: `output_dir` if set, else the directory named
    /// by the environment variable, else `runs/`; then the run name.
    pub fn run_dir(&self) -> PathBuf {
        let root = self
            .output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("runs"));
        root.join(&self.name)
    }
}

/// Reads an optional config file, applies overrides and resolves defaults.
pub fn parse_config<S: AsRef<str>>(path: Option<&Path>, overrides: &[S]) -> Result<ExperimentConfig> {
    let file = match path {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    ExperimentConfig::resolve(&file.with_overrides(overrides)?)
}
