//! Specificity, threshold statistics and running accuracy.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::readout::{SparseActivation, SparseReadout};
use crate::scalar::Scalar;

/// `n_active[i][j]`: how often node `i` was active at decision time on a
/// class-`j` episode, over `n_total` tallied episodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityCounts {
    pub n_nodes: usize,
    pub n_class: usize,
    n_active: Vec<u64>,
    pub per_class: Vec<u64>,
    pub n_total: u64,
}

impl ActivityCounts {
    pub fn new(n_nodes: usize, n_class: usize) -> Self {
        Self {
            n_nodes,
            n_class,
            n_active: vec![0; n_nodes * n_class],
            per_class: vec![0; n_class],
            n_total: 0,
        }
    }

    pub fn get(&self, node: usize, class: usize) -> u64 {
        self.n_active[node * self.n_class + class]
    }

    pub fn tally_activity<T: Scalar>(&mut self, x: &SparseActivation<T>, label: usize) -> Result<()> {
        check_dim("activity tally", self.n_nodes, x.len())?;
        if label >= self.n_class {
            return Err(Error::Dimension {
                context: "activity tally label",
                expected: self.n_class,
                actual: label,
            });
        }
        for (i, &a) in x.active.iter().enumerate() {
            if a {
                self.n_active[i * self.n_class + label] += 1;
            }
        }
        self.per_class[label] += 1;
        self.n_total += 1;
        Ok(())
    }

    /// Additive merge of two replicas' tallies.
    pub fn merge(&mut self, other: &ActivityCounts) -> Result<()> {
        check_dim("activity merge nodes", self.n_nodes, other.n_nodes)?;
        check_dim("activity merge classes", self.n_class, other.n_class)?;
        for (a, b) in self.n_active.iter_mut().zip(&other.n_active) {
            *a += b;
        }
        for (a, b) in self.per_class.iter_mut().zip(&other.per_class) {
            *a += b;
        }
        self.n_total += other.n_total;
        Ok(())
    }

    pub fn specificity(&self) -> Result<SpecificityReport> {
        if self.n_total == 0 {
            return Err(Error::UndefinedMeasure("specificity needs at least one tallied episode"));
        }
        let c = self.n_class;
        let n = self.n_total as f64;
        let norm = factorial(c.saturating_sub(1));
        let mut spec_tensor = vec![0.0; self.n_nodes * c * c];
        let mut sp_per_neuron = vec![0.0; self.n_nodes];
        for i in 0..self.n_nodes {
            let mut upper = 0.0;
            for j in 0..c {
                for k in 0..c {
                    let s = (self.get(i, j) as f64 - self.get(i, k) as f64).abs() / n;
                    spec_tensor[(i * c + j) * c + k] = s;
                    if k > j {
                        upper += s;
                    }
                }
            }
            sp_per_neuron[i] = upper / norm;
        }
        Ok(SpecificityReport {
            n_class: c,
            spec_tensor,
            sp_per_neuron,
        })
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecificityReport {
    pub n_class: usize,
    /// `spec[i][j][k] = |N_ij - N_ik| / N`, flattened row-major.
    pub spec_tensor: Vec<f64>,
    /// `(1 / (n_class - 1)!) * sum_{j<k} spec[i][j][k]`
    pub sp_per_neuron: Vec<f64>,
}

impl SpecificityReport {
    pub fn spec(&self, node: usize, j: usize, k: usize) -> f64 {
        self.spec_tensor[(node * self.n_class + j) * self.n_class + k]
    }

    pub fn mean_sp(&self) -> f64 {
        mean(&self.sp_per_neuron)
    }

    /// Counts of `Sp_i` in `bins` equal-width bins over `[0, 1]`.
    pub fn histogram(&self, bins: usize) -> Vec<u64> {
        let mut h = vec![0; bins];
        for &s in &self.sp_per_neuron {
            let b = ((s * bins as f64) as usize).min(bins - 1);
            h[b] += 1;
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaStats {
    pub mean: f64,
    pub std: f64,
}

/// Mean and (population) standard deviation of the effective thresholds.
pub fn theta_stats<T: Scalar>(readout: &SparseReadout<T>) -> ThetaStats {
    let n = readout.n_nodes();
    if n == 0 {
        return ThetaStats { mean: 0.0, std: 0.0 };
    }
    // Welford, so large theta_g offsets do not cancel the spread.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, t) in readout.effective_thresholds().enumerate() {
        let t = t.to_f64_lossy();
        let delta = t - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (t - mean);
    }
    ThetaStats {
        mean,
        std: (m2 / n as f64).max(0.0).sqrt(),
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1); zero for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Mean over the most recent `window` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedMean {
    window: usize,
    values: VecDeque<f64>,
    sum: f64,
}

impl WindowedMean {
    pub fn new(window: usize) -> Self {
        assert!(window > 0, "window must be positive");
        Self {
            window,
            values: VecDeque::with_capacity(window),
            sum: 0.0,
        }
    }

    pub fn push(&mut self, v: f64) {
        if self.values.len() == self.window {
            if let Some(old) = self.values.pop_front() {
                self.sum -= old;
            }
        }
        self.values.push_back(v);
        self.sum += v;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> Option<f64> {
        if self.values.is_empty() {
            None
        } else {
            // Recompute rather than trust the running sum after many updates.
            Some(self.values.iter().sum::<f64>() / self.values.len() as f64)
        }
    }
}

/// Fraction of correct decisions among the last `window` entries of `history`.
pub fn running_accuracy(history: &[bool], window: usize) -> Option<f64> {
    let tail = &history[history.len().saturating_sub(window)..];
    if tail.is_empty() {
        return None;
    }
    Some(tail.iter().filter(|&&c| c).count() as f64 / tail.len() as f64)
}

/// One line of a metrics stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub episode: usize,
    pub algorithm: String,
    pub accuracy_running_avg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_running_avg: Option<f64>,
    pub loss_running_avg: Option<f64>,
    pub coding_level: Option<f64>,
    pub theta_mean: f64,
    pub theta_std: f64,
    pub theta_g: f64,
    pub acceptance_rate: Option<f64>,
}
