//! Thresholded sparse layer and linear readout.
//!
//! `x = relu(V - theta)` with per-node effective threshold
//! `theta_i = theta_g + theta_local_i`, output `y = W_out x`, and a softmax
//! choice over `y`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::linalg::DenseMatrix;
use crate::reservoir::ReservoirState;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SparseReadout<T> {
    pub theta_global: T,
    pub theta_local: Vec<T>,
    /// `n_class x n_nodes`
    pub w_out: DenseMatrix<T>,
}

impl<T: Scalar> SparseReadout<T> {
    /// Zero weights, zero local thresholds.
    pub fn new(n_nodes: usize, n_class: usize, theta_global: T) -> Self {
        Self {
            theta_global,
            theta_local: vec![T::zero(); n_nodes],
            w_out: DenseMatrix::zeros(n_class, n_nodes),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.theta_local.len()
    }

    pub fn n_class(&self) -> usize {
        self.w_out.rows()
    }

    #[inline]
    pub fn effective_threshold(&self, i: usize) -> T {
        self.theta_global + self.theta_local[i]
    }

    pub fn effective_thresholds(&self) -> impl Iterator<Item = T> + '_ {
        self.theta_local.iter().map(move |&t| self.theta_global + t)
    }

    pub fn sparse_activation(&self, state: &ReservoirState<T>) -> Result<SparseActivation<T>> {
        check_dim("readout thresholds", self.n_nodes(), state.v.len())?;
        let mut out = SparseActivation::empty(self.n_nodes());
        self.activate_into(&state.v, &mut out);
        Ok(out)
    }

    pub(crate) fn activate_into(&self, v: &[T], out: &mut SparseActivation<T>) {
        for (i, &vi) in v.iter().enumerate() {
            let xi = (vi - self.effective_threshold(i)).relu();
            out.x[i] = xi;
            out.active[i] = xi > T::zero();
        }
    }

    pub fn output(&self, x: &SparseActivation<T>) -> Result<Vec<T>> {
        check_dim("readout activation", self.n_nodes(), x.x.len())?;
        let mut y = vec![T::zero(); self.n_class()];
        self.output_into(x, &mut y);
        Ok(y)
    }

    /// Skips silent nodes, which is where the sparsity pays off.
    pub(crate) fn output_into(&self, x: &SparseActivation<T>, y: &mut [T]) {
        for (j, yj) in y.iter_mut().enumerate() {
            let row = self.w_out.row(j);
            let mut acc = T::zero();
            for (i, &xi) in x.x.iter().enumerate() {
                if x.active[i] {
                    acc += row[i] * xi;
                }
            }
            *yj = acc;
        }
    }
}

/// `x = relu(V - theta)` together with its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SparseActivation<T> {
    pub x: Vec<T>,
    pub active: Vec<bool>,
}

impl<T: Scalar> SparseActivation<T> {
    pub fn empty(n: usize) -> Self {
        Self {
            x: vec![T::zero(); n],
            active: vec![false; n],
        }
    }

    /// Reads the hidden state directly, without thresholds.
    pub fn raw(state: &ReservoirState<T>) -> Self {
        let mut out = Self::empty(state.len());
        out.set_raw(&state.v);
        out
    }

    pub(crate) fn set_raw(&mut self, v: &[T]) {
        for (i, &vi) in v.iter().enumerate() {
            self.x[i] = vi;
            self.active[i] = vi > T::zero();
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Fraction of nodes with `x_i > 0`.
    pub fn coding_level(&self) -> f64 {
        if self.x.is_empty() {
            return 0.0;
        }
        self.n_active() as f64 / self.x.len() as f64
    }
}

/// Softmax probabilities `exp(y_k/T) / sum_j exp(y_j/T)`, max-shifted.
pub fn softmax<T: Scalar>(y: &[T], temperature: f64) -> Vec<f64> {
    let scaled: Vec<f64> = y.iter().map(|v| v.to_f64_lossy() / temperature).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Samples a class index from the softmax of `y` at `temperature`.
pub fn decide<T: Scalar, R: Rng + ?Sized>(y: &[T], temperature: f64, rng: &mut R) -> usize {
    debug_assert!(temperature > 0.0);
    debug_assert!(!y.is_empty());
    let probs = softmax(y, temperature);
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (k, p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return k;
        }
    }
    probs.len() - 1
}

pub fn argmax<T: Scalar>(y: &[T]) -> usize {
    let mut best = 0;
    for (k, &v) in y.iter().enumerate() {
        if v > y[best] {
            best = k;
        }
    }
    best
}
