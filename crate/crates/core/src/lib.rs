//! Echo-state reservoirs read out through a layer of learnable firing
//! thresholds.
//!
//! The core is generic over the scalar type (`f32` or `f64`); the aliases
//! at the bottom of this file fix it for the common case.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod readout;
pub mod reservoir;
pub mod rl;
pub mod scalar;
pub mod seed;
pub mod simulate;
pub mod tasks;
pub mod training;

pub use error::{Error, Result};
pub use readout::{argmax, decide, softmax, SparseActivation, SparseReadout};
pub use reservoir::{Reservoir, ReservoirParams, ReservoirState};
pub use scalar::Scalar;
pub use seed::{Purpose, SeedTree};
pub use tasks::{Episode, StimulusSet, Task};
pub use training::{Algorithm, TrainerConfig};

pub type Reservoir64 = Reservoir<f64>;
pub type Reservoir32 = Reservoir<f32>;
pub type SparseReadout64 = SparseReadout<f64>;
pub type SparseReadout32 = SparseReadout<f32>;
pub type StimulusSet64 = StimulusSet<f64>;
pub type StimulusSet32 = StimulusSet<f32>;
pub type Task64 = Task<f64>;
pub type Task32 = Task<f32>;
