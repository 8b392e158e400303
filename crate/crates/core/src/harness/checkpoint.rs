//! Checkpoints: enough to rebuild the reservoir, restore the trained readout
//! and continue the decision stream.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{theta_stats, ThetaStats};
use crate::readout::SparseReadout;
use crate::reservoir::{Reservoir, ReservoirParams};
use crate::scalar::Scalar;
use crate::seed::StreamRng;
use crate::training::Algorithm;

use super::config::{Precision, TaskKind};

pub const CHECKPOINT_VERSION: u32 = 1;

/// The reservoir is stored by its parameters (including the seed), not by
/// its matrices; `spectral_radius` lets a rebuild be verified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirHeader {
    pub n_nodes: usize,
    pub n_inputs: usize,
    pub seed: u64,
    pub spectral_radius: f64,
    pub params: ReservoirParams,
}

impl ReservoirHeader {
    pub fn of<T: Scalar>(reservoir: &Reservoir<T>) -> Self {
        Self {
            n_nodes: reservoir.n_nodes(),
            n_inputs: reservoir.n_inputs(),
            seed: reservoir.params().seed,
            spectral_radius: reservoir.recurrent().spectral_radius,
            params: reservoir.params().clone(),
        }
    }

    /// Rebuilds the reservoir and checks it matches the header.
    pub fn rebuild<T: Scalar>(&self) -> Result<Reservoir<T>> {
        let r = Reservoir::build(self.params.clone())?;
        let drift = (r.recurrent().spectral_radius - self.spectral_radius).abs();
        if r.n_nodes() != self.n_nodes || r.n_inputs() != self.n_inputs || drift > 1e-9 {
            return Err(Error::Format {
                what: "checkpoint",
                message: "rebuilt reservoir does not match the stored header".into(),
            });
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Checkpoint<T> {
    pub version: u32,
    pub run: String,
    pub task: TaskKind,
    pub precision: Precision,
    pub algorithm: Algorithm,
    pub replica: usize,
    pub episodes: usize,
    pub reservoir: ReservoirHeader,
    pub readout: SparseReadout<T>,
    /// Decision stream state at the end of training.
    pub rng: StreamRng,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(file), self).map_err(|e| Error::Format {
            what: "checkpoint",
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Self = serde_json::from_str(&text).map_err(|e| Error::Format {
            what: "checkpoint",
            message: e.to_string(),
        })?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Format {
                what: "checkpoint",
                message: format!("version {} is not {CHECKPOINT_VERSION}", ck.version),
            });
        }
        Ok(ck)
    }

    pub fn summary(&self) -> CheckpointSummary {
        CheckpointSummary {
            run: self.run.clone(),
            task: self.task,
            precision: self.precision,
            algorithm: self.algorithm,
            replica: self.replica,
            episodes: self.episodes,
            n_nodes: self.reservoir.n_nodes,
            n_inputs: self.reservoir.n_inputs,
            n_class: self.readout.n_class(),
            reservoir_seed: self.reservoir.seed,
            spectral_radius: self.reservoir.spectral_radius,
            theta_g: self.readout.theta_global.to_f64_lossy(),
            theta: theta_stats(&self.readout),
            w_out_norm: self
                .readout
                .w_out
                .as_slice()
                .iter()
                .map(|w| w.to_f64_lossy().powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSummary {
    pub run: String,
    pub task: TaskKind,
    pub precision: Precision,
    pub algorithm: Algorithm,
    pub replica: usize,
    pub episodes: usize,
    pub n_nodes: usize,
    pub n_inputs: usize,
    pub n_class: usize,
    pub reservoir_seed: u64,
    pub spectral_radius: f64,
    pub theta_g: f64,
    pub theta: ThetaStats,
    pub w_out_norm: f64,
}

/// Summarizes a checkpoint of either precision.
pub fn inspect_checkpoint(path: &Path) -> Result<CheckpointSummary> {
    // f32 values parse as f64; the summary only needs them approximately.
    Checkpoint::<f64>::load(path).map(|c| c.summary())
}
