//! Minimal sparse/dense matrix types and a spectral-radius estimator.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CsrMatrix<T> {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from per-row `(column, value)` lists. Columns within a
    /// row are sorted; duplicates are rejected.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, T)>>) -> Result<Self> {
        let n_rows = rows.len();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::Format {
                        what: "sparse matrix",
                        message: format!("duplicate entry at ({r}, {})", w[0].0),
                    });
                }
            }
            for (c, v) in row {
                if c >= cols {
                    return Err(Error::Dimension {
                        context: "sparse matrix column index",
                        expected: cols,
                        actual: c,
                    });
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            rows: n_rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_dense(rows: usize, cols: usize, data: &[T]) -> Result<Self> {
        check_dim("dense source length", rows * cols, data.len())?;
        let rows_vec = (0..rows)
            .map(|r| {
                (0..cols)
                    .filter_map(|c| {
                        let v = data[r * cols + c];
                        (v != T::zero()).then_some((c, v))
                    })
                    .collect()
            })
            .collect();
        Self::from_rows(cols, rows_vec)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn density(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        self.nnz() as f64 / (self.rows * self.cols) as f64
    }

    /// Iterates the stored `(column, value)` pairs of one row.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.row(r)
            .find(|&(col, _)| col == c)
            .map_or(T::zero(), |(_, v)| v)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn scale(&mut self, factor: T) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// `out = self * x`
    pub fn mul_vec_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *o = acc;
        }
    }

    /// `out += self * x`
    pub fn mul_vec_add(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *o += acc;
        }
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows * self.cols];
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                out[r * self.cols + c] = v;
            }
        }
        out
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let bad = |message: String| Error::Format {
            what: "sparse matrix",
            message,
        };
        if self.row_ptr.len() != self.rows + 1 || self.row_ptr[0] != 0 {
            return Err(bad("row pointer length".into()));
        }
        if self.col_idx.len() != self.values.len()
            || *self.row_ptr.last().unwrap() != self.values.len()
        {
            return Err(bad("index/value length".into()));
        }
        if self.row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(bad("row pointers not monotone".into()));
        }
        if self.col_idx.iter().any(|&c| c >= self.cols) {
            return Err(bad("column index out of range".into()));
        }
        Ok(())
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        check_dim("dense matrix data", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn fill(&mut self, v: T) {
        self.data.fill(v);
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(&w, &xi)| w * xi).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Width of the iterated block; several vectors are needed because the
    /// dominant eigenvalues of a real random matrix are often a complex pair.
    pub block: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            rel_tol: 1e-10,
            block: 8,
        }
    }
}

/// Estimates the spectral radius of a square sparse matrix by block power
/// (orthogonal) iteration with Rayleigh-Ritz extraction on the block.
pub fn spectral_radius<T: Scalar>(m: &CsrMatrix<T>, opts: PowerIteration) -> Result<f64> {
    check_dim("spectral radius (square matrix)", m.rows(), m.cols())?;
    let n = m.rows();
    if n == 0 || m.nnz() == 0 {
        return Ok(0.0);
    }
    let values: Vec<f64> = m.values.iter().map(|v| v.to_f64_lossy()).collect();
    let apply = |x: &[f64], out: &mut [f64]| {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                acc += values[k] * x[m.col_idx[k]];
            }
            *o = acc;
        }
    };

    let b = opts.block.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x005e_ed0f_5eed);
    let mut q: Vec<Vec<f64>> = (0..b)
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    orthonormalize(&mut q);
    let mut z = vec![vec![0.0; n]; b];

    let mut prev = f64::NAN;
    let mut stable = 0;
    let mut radius = 0.0;
    for _ in 0..opts.max_iter {
        for (qi, zi) in q.iter().zip(z.iter_mut()) {
            apply(qi, zi);
        }
        let ritz = DMatrix::from_fn(b, b, |i, j| dot(&q[i], &z[j]));
        radius = ritz
            .complex_eigenvalues()
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        std::mem::swap(&mut q, &mut z);
        let rank = orthonormalize(&mut q);
        if rank == 0 {
            // A nilpotent action on the block; nothing left to iterate.
            return Ok(radius);
        }
        if prev.is_finite() && (radius - prev).abs() <= opts.rel_tol * radius.max(f64::MIN_POSITIVE) {
            stable += 1;
            if stable >= 3 {
                break;
            }
        } else {
            stable = 0;
        }
        prev = radius;
    }
    Ok(radius)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modified Gram-Schmidt in place; collapsed vectors are zeroed. Returns the
/// number of surviving directions.
fn orthonormalize(vs: &mut [Vec<f64>]) -> usize {
    let mut rank = 0;
    for i in 0..vs.len() {
        let (done, rest) = vs.split_at_mut(i);
        let v = &mut rest[0];
        let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for u in done.iter() {
            let p = dot(u, v);
            for (vk, uk) in v.iter_mut().zip(u) {
                *vk -= p * uk;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 * scale.max(f64::MIN_POSITIVE) && norm > 0.0 {
            for x in v.iter_mut() {
                *x /= norm;
            }
            rank += 1;
        } else {
            v.fill(0.0);
        }
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_matches_dense_product() {
        let dense = [1.0, 0.0, 2.0, 0.0, -3.0, 0.0];
        let m = CsrMatrix::from_dense(2, 3, &dense).unwrap();
        assert_eq!(m.nnz(), 3);
        let mut out = vec![0.0; 2];
        m.mul_vec_into(&[1.0, 2.0, 3.0], &mut out);
        assert_eq!(out, vec![7.0, -6.0]);
        m.mul_vec_add(&[1.0, 1.0, 1.0], &mut out);
        assert_eq!(out, vec![10.0, -9.0]);
        assert_eq!(m.to_dense(), dense.to_vec());
    }

    #[test]
    fn duplicate_entries_rejected() {
        let err = CsrMatrix::<f64>::from_rows(2, vec![vec![(1, 1.0), (1, 2.0)]]).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
    }

    #[test]
    fn rotation_radius_is_exact() {
        // Eigenvalues are ±0.5i, which defeats single-vector power iteration.
        let m = CsrMatrix::from_dense(2, 2, &[0.0, -0.5, 0.5, 0.0]).unwrap();
        let r = spectral_radius(&m, PowerIteration::default()).unwrap();
        assert!((r - 0.5).abs() < 1e-12, "{r}");
    }

    #[test]
    fn nilpotent_and_empty_have_zero_radius() {
        let m = CsrMatrix::from_dense(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(spectral_radius(&m, PowerIteration::default()).unwrap() < 1e-12);
        let z = CsrMatrix::<f32>::zeros(4, 4);
        assert_eq!(spectral_radius(&z, PowerIteration::default()).unwrap(), 0.0);
    }

    #[test]
    fn dense_matvec() {
        let m = DenseMatrix::from_vec(2, 2, vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.mul_vec(&[1.0, 1.0]), vec![3.0, 7.0]);
    }
}
