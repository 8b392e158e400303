//! Squared-error loss and the descent rules for `W_out` and local thresholds.
//!
//! `dW[j,i] = 2 * eta_w * r_j * x_i` is plain descent on the loss;
//! the thresholds follow the published rule, whose rate absorbs the 2:
//! `dtheta_i = -eta_theta * sum_j r_j * W[j,i] * H(x_i)` with
//! `r = y_true - y` and `H(0) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::linalg::DenseMatrix;
use crate::readout::{SparseActivation, SparseReadout};
use crate::scalar::Scalar;

/// One-hot target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TargetVector<T> {
    pub y_true: Vec<T>,
}

impl<T: Scalar> TargetVector<T> {
    pub fn one_hot(class: usize, n_class: usize) -> Self {
        assert!(class < n_class, "class {class} out of range for {n_class} classes");
        let mut y_true = vec![T::zero(); n_class];
        y_true[class] = T::one();
        Self { y_true }
    }

    pub fn class(&self) -> usize {
        self.y_true
            .iter()
            .position(|&v| v == T::one())
            .expect("one-hot target")
    }
}

/// `E = sum_j (y_true_j - y_j)^2`
pub fn loss<T: Scalar>(target: &TargetVector<T>, y: &[T]) -> Result<T> {
    check_dim("loss", target.y_true.len(), y.len())?;
    Ok(target
        .y_true
        .iter()
        .zip(y)
        .map(|(&t, &v)| (t - v) * (t - v))
        .sum())
}

pub(crate) fn residual_into<T: Scalar>(label: usize, y: &[T], out: &mut [T]) {
    for (j, (o, &v)) in out.iter_mut().zip(y).enumerate() {
        let t = if j == label { T::one() } else { T::zero() };
        *o = t - v;
    }
}

/// Applies `W_out += 2 * eta_w * r x^T`.
pub fn grad_w_update<T: Scalar>(
    readout: &mut SparseReadout<T>,
    x: &SparseActivation<T>,
    target: &TargetVector<T>,
    y: &[T],
    eta_w: T,
) -> Result<()> {
    check_dim("grad_w_update activation", readout.n_nodes(), x.len())?;
    check_dim("grad_w_update target", readout.n_class(), target.y_true.len())?;
    check_dim("grad_w_update output", readout.n_class(), y.len())?;
    for j in 0..readout.n_class() {
        let step = T::of(2.0) * eta_w * (target.y_true[j] - y[j]);
        add_scaled_active(readout.w_out.row_mut(j), x, step);
    }
    Ok(())
}

/// Applies the thresholds rule to `theta_local` only; silent nodes are
/// untouched.
pub fn grad_theta_update<T: Scalar>(
    readout: &mut SparseReadout<T>,
    x: &SparseActivation<T>,
    target: &TargetVector<T>,
    y: &[T],
    eta_theta: T,
) -> Result<()> {
    check_dim("grad_theta_update activation", readout.n_nodes(), x.len())?;
    check_dim("grad_theta_update target", readout.n_class(), target.y_true.len())?;
    check_dim("grad_theta_update output", readout.n_class(), y.len())?;
    let residual: Vec<T> = target.y_true.iter().zip(y).map(|(&t, &v)| t - v).collect();
    let mut delta = vec![T::zero(); readout.n_nodes()];
    theta_direction_add(&readout.w_out, x, &residual, T::one(), &mut delta);
    for (t, d) in readout.theta_local.iter_mut().zip(delta) {
        *t += eta_theta * d;
    }
    Ok(())
}

#[inline]
pub(crate) fn add_scaled_active<T: Scalar>(row: &mut [T], x: &SparseActivation<T>, scale: T) {
    if scale == T::zero() {
        return;
    }
    for (i, w) in row.iter_mut().enumerate() {
        if x.active[i] {
            *w += scale * x.x[i];
        }
    }
}

/// `acc_i += scale * (-sum_j r_j W[j,i]) * H(x_i)`
#[inline]
pub(crate) fn theta_direction_add<T: Scalar>(
    w_out: &DenseMatrix<T>,
    x: &SparseActivation<T>,
    residual: &[T],
    scale: T,
    acc: &mut [T],
) {
    for (j, &r) in residual.iter().enumerate() {
        if r == T::zero() {
            continue;
        }
        let row = w_out.row(j);
        let s = scale * r;
        for (i, a) in acc.iter_mut().enumerate() {
            if x.active[i] {
                *a -= s * row[i];
            }
        }
    }
}
