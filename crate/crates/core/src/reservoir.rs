//! Fixed recurrent network of leaky integrators.
//!
//! `V(t+1) = (1 - alpha) V(t) + alpha * relu(W_in s + W_rho V(t))`, where
//! `W_rho` is the recurrent matrix stored already rescaled to spectral
//! radius `rho`.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{spectral_radius, CsrMatrix, PowerIteration};
use crate::scalar::Scalar;

/// Below this the base draw is treated as having no usable spectrum.
const MIN_BASE_RADIUS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirParams {
    pub n_nodes: usize,
    pub n_inputs: usize,
    /// Leak rate `dt / tau`.
    pub alpha: f64,
    /// Target spectral radius of the recurrent matrix.
    pub rho: f64,
    pub recurrent_density: f64,
    /// Mean number of input channels feeding each node.
    pub mean_in_degree: f64,
    /// Standard deviation of the underlying normal of the in-degree law.
    pub in_degree_sigma: f64,
    /// Sum of the input weights of any connected node (`c`).
    pub input_scale: f64,
    /// Draw recurrent weights from N(0,1) (`true`) or |N(0,1)| (`false`).
    pub signed_recurrent: bool,
    pub seed: u64,
}

impl Default for ReservoirParams {
    fn default() -> Self {
        Self {
            n_nodes: 1000,
            n_inputs: 24,
            alpha: 0.025,
            rho: 0.8,
            recurrent_density: 0.01,
            mean_in_degree: 6.0,
            in_degree_sigma: 0.5,
            input_scale: 1.0,
            signed_recurrent: true,
            seed: 0,
        }
    }
}

impl ReservoirParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(Error::config("n_nodes", "must be at least 1"));
        }
        if self.n_inputs == 0 {
            return Err(Error::config("n_inputs", "must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config("alpha", format!("{} not in (0, 1]", self.alpha)));
        }
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            return Err(Error::config("rho", format!("{} not in [0, 1)", self.rho)));
        }
        if !(self.recurrent_density > 0.0 && self.recurrent_density <= 1.0) {
            return Err(Error::config(
                "recurrent_density",
                format!("{} not in (0, 1]", self.recurrent_density),
            ));
        }
        if !(self.mean_in_degree > 0.0 && self.mean_in_degree.is_finite()) {
            return Err(Error::config("mean_in_degree", "must be positive"));
        }
        if !(self.in_degree_sigma >= 0.0 && self.in_degree_sigma.is_finite()) {
            return Err(Error::config("in_degree_sigma", "must be nonnegative"));
        }
        if !self.input_scale.is_finite() {
            return Err(Error::config("input_scale", "must be finite"));
        }
        Ok(())
    }
}

/// Sparse input projection; every nonzero weight of node `i` equals
/// `scale / in_degrees[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct InputMatrix<T> {
    pub weights: CsrMatrix<T>,
    pub in_degrees: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RecurrentMatrix<T> {
    /// Pre-scaled so that its spectral radius is `rho`.
    pub weights: CsrMatrix<T>,
    pub spectral_radius: f64,
}

/// Draws per-node fan-in from a rounded lognormal with mean `mean_in_degree`,
/// clamped to `[1, n_inputs]`, then picks that many distinct input channels.
pub fn build_input_matrix<T: Scalar, R: Rng + ?Sized>(
    params: &ReservoirParams,
    rng: &mut R,
) -> Result<InputMatrix<T>> {
    params.validate()?;
    let sigma = params.in_degree_sigma;
    let mu = params.mean_in_degree.ln() - 0.5 * sigma * sigma;
    let law = if sigma > 0.0 {
        Some(LogNormal::new(mu, sigma).map_err(|e| Error::config("in_degree_sigma", e.to_string()))?)
    } else {
        None
    };
    let mut in_degrees = Vec::with_capacity(params.n_nodes);
    let mut rows = Vec::with_capacity(params.n_nodes);
    for _ in 0..params.n_nodes {
        let raw = match &law {
            Some(l) => l.sample(rng),
            None => params.mean_in_degree,
        };
        let k = (raw.round() as usize).clamp(1, params.n_inputs);
        let w = T::of(params.input_scale / k as f64);
        let mut chosen: Vec<(usize, T)> = index::sample(rng, params.n_inputs, k)
            .into_iter()
            .map(|c| (c, w))
            .collect();
        chosen.sort_unstable_by_key(|&(c, _)| c);
        in_degrees.push(k);
        rows.push(chosen);
    }
    Ok(InputMatrix {
        weights: CsrMatrix::from_rows(params.n_inputs, rows)?,
        in_degrees,
    })
}

/// Bernoulli sparsity pattern with standard-normal weights, rescaled to unit
/// spectral radius and then to `rho`.
pub fn build_recurrent_matrix<T: Scalar, R: Rng + ?Sized>(
    params: &ReservoirParams,
    rng: &mut R,
) -> Result<RecurrentMatrix<T>> {
    params.validate()?;
    let n = params.n_nodes;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = Vec::new();
        for c in 0..n {
            if rng.random::<f64>() < params.recurrent_density {
                let w: f64 = StandardNormal.sample(rng);
                let w = if params.signed_recurrent { w } else { w.abs() };
                row.push((c, T::of(w)));
            }
        }
        rows.push(row);
    }
    if params.rho == 0.0 {
        return Ok(RecurrentMatrix {
            weights: CsrMatrix::zeros(n, n),
            spectral_radius: 0.0,
        });
    }
    let mut weights = CsrMatrix::from_rows(n, rows)?;
    let base = spectral_radius(&weights, PowerIteration::default())?;
    if base < MIN_BASE_RADIUS {
        return Err(Error::Construction(format!(
            "base spectral radius {base:e} is numerically zero; redraw with another seed"
        )));
    }
    weights.scale(T::of(params.rho / base));
    Ok(RecurrentMatrix {
        weights,
        spectral_radius: params.rho,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Reservoir<T> {
    params: ReservoirParams,
    input: InputMatrix<T>,
    recurrent: RecurrentMatrix<T>,
    alpha: T,
}

impl<T: Scalar> Reservoir<T> {
    /// Builds both matrices from `params.seed` (input first, then recurrent).
    pub fn build(params: ReservoirParams) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let input = build_input_matrix(&params, &mut rng)?;
        let recurrent = build_recurrent_matrix(&params, &mut rng)?;
        Self::from_parts(params, input, recurrent)
    }

    /// Assembles a reservoir from explicit matrices (hand-built or restored).
    pub fn from_parts(
        params: ReservoirParams,
        input: InputMatrix<T>,
        recurrent: RecurrentMatrix<T>,
    ) -> Result<Self> {
        params.validate()?;
        check_dim("input matrix rows", params.n_nodes, input.weights.rows())?;
        check_dim("input matrix cols", params.n_inputs, input.weights.cols())?;
        check_dim("recurrent matrix rows", params.n_nodes, recurrent.weights.rows())?;
        check_dim("recurrent matrix cols", params.n_nodes, recurrent.weights.cols())?;
        input.weights.validate()?;
        recurrent.weights.validate()?;
        let alpha = T::of(params.alpha);
        Ok(Self {
            params,
            input,
            recurrent,
            alpha,
        })
    }

    pub fn params(&self) -> &ReservoirParams {
        &self.params
    }

    pub fn input(&self) -> &InputMatrix<T> {
        &self.input
    }

    pub fn recurrent(&self) -> &RecurrentMatrix<T> {
        &self.recurrent
    }

    pub fn n_nodes(&self) -> usize {
        self.params.n_nodes
    }

    pub fn n_inputs(&self) -> usize {
        self.params.n_inputs
    }

    /// One integration step with value semantics.
    pub fn step(&self, state: &ReservoirState<T>, input: &[T]) -> Result<ReservoirState<T>> {
        check_dim("reservoir state", self.n_nodes(), state.v.len())?;
        check_dim("reservoir input", self.n_inputs(), input.len())?;
        let mut next = state.v.clone();
        let mut drive = vec![T::zero(); self.n_nodes()];
        self.advance(&mut next, input, &mut drive);
        Ok(ReservoirState { v: next })
    }

    /// In-place step; `drive` is scratch of length `n_nodes`.
    pub(crate) fn advance(&self, v: &mut [T], input: &[T], drive: &mut [T]) {
        self.input.weights.mul_vec_into(input, drive);
        self.recurrent.weights.mul_vec_add(v, drive);
        let keep = T::one() - self.alpha;
        for (vi, &d) in v.iter_mut().zip(drive.iter()) {
            *vi = keep * *vi + self.alpha * d.relu();
        }
    }

    pub fn integrator(&self) -> Integrator<'_, T> {
        Integrator {
            reservoir: self,
            v: vec![T::zero(); self.n_nodes()],
            drive: vec![T::zero(); self.n_nodes()],
        }
    }
}

/// Hidden activity `V(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ReservoirState<T> {
    pub v: Vec<T>,
}

impl<T: Scalar> ReservoirState<T> {
    pub fn zeros(n_nodes: usize) -> Self {
        Self {
            v: vec![T::zero(); n_nodes],
        }
    }

    pub fn reset(&self) -> Self {
        Self::zeros(self.v.len())
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.v
            .iter()
            .map(|x| {
                let x = x.to_f64_lossy();
                x * x
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Reusable stepping buffer for running many steps without reallocating.
pub struct Integrator<'a, T> {
    reservoir: &'a Reservoir<T>,
    v: Vec<T>,
    drive: Vec<T>,
}

impl<T: Scalar> Integrator<'_, T> {
    pub fn reset(&mut self) {
        self.v.fill(T::zero());
    }

    pub fn set_state(&mut self, state: &ReservoirState<T>) -> Result<()> {
        check_dim("reservoir state", self.v.len(), state.v.len())?;
        self.v.copy_from_slice(&state.v);
        Ok(())
    }

    pub fn advance(&mut self, input: &[T]) -> Result<()> {
        check_dim("reservoir input", self.reservoir.n_inputs(), input.len())?;
        self.reservoir.advance(&mut self.v, input, &mut self.drive);
        Ok(())
    }

    pub fn v(&self) -> &[T] {
        &self.v
    }

    pub fn state(&self) -> ReservoirState<T> {
        ReservoirState { v: self.v.clone() }
    }
}
