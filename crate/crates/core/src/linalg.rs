//! Symmetric banded linear algebra for the structured-grid Newton systems.
//!
//! The meridian mesh is a tensor grid, so the stiffness/Hessian matrix has an
//! exact bandwidth known at assembly time. A dense banded Cholesky is then
//! both simpler and faster than a general sparse solver, and is fully
//! deterministic.

use crate::error::{Error, Result};

/// Symmetric positive definite matrix stored by its lower band:
/// `data[i * (bw + 1) + k]` holds A[i, i - k] for k = 0..=bw.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Add `v` to A[i, j] (and implicitly A[j, i]); |i - j| must be <= bw.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        debug_assert!(k <= self.bw, "entry ({i}, {j}) outside band {}", self.bw);
        self.data[hi * (self.bw + 1) + k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k > self.bw {
            0.0
        } else {
            self.data[hi * (self.bw + 1) + k]
        }
    }

    /// Zero out row and column `i` and put 1 on the diagonal. Used to impose
    /// Dirichlet constraints after assembly.
    pub fn set_identity_row(&mut self, i: usize) {
        for k in 0..=self.bw {
            self.data[i * (self.bw + 1) + k] = 0.0;
            let j = i + k;
            if k > 0 && j < self.n {
                self.data[j * (self.bw + 1) + k] = 0.0;
            }
        }
        self.data[i * (self.bw + 1)] = 1.0;
    }

    /// In-place Cholesky factorization A = L L^T within the band.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let w = self.bw + 1;
        for i in 0..self.n {
            let start = i.saturating_sub(self.bw);
            for j in start..i {
                // L[i, j] = (A[i, j] - sum_m L[i, m] L[j, m]) / L[j, j]
                let mut s = self.data[i * w + (i - j)];
                let m0 = start.max(j.saturating_sub(self.bw));
                for m in m0..j {
                    s -= self.data[i * w + (i - m)] * self.data[j * w + (j - m)];
                }
                self.data[i * w + (i - j)] = s / self.data[j * w];
            }
            let mut d = self.data[i * w];
            for m in start..i {
                d -= self.data[i * w + (i - m)].powi(2);
            }
            if d.is_nan() || d <= 0.0 {
                return Err(Error::NonConvergence(format!(
                    "Newton system lost positive definiteness at row {i} (pivot {d})"
                )));
            }
            self.data[i * w] = d.sqrt();
        }
        Ok(BandCholesky {
            n: self.n,
            bw: self.bw,
            data: self.data,
        })
    }

    /// Dense copy, for small-system tests only.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// y = A x.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let start = i.saturating_sub(self.bw);
            for j in start..=i {
                let v = self.data[i * (self.bw + 1) + (i - j)];
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }
}

/// Banded Cholesky factor; solves A x = b by forward/back substitution.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandCholesky {
    #[allow(clippy::needless_range_loop)] // substitution kernels index two arrays
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let w = self.bw + 1;
        let mut x = b.to_vec();
        // L y = b
        for i in 0..self.n {
            let start = i.saturating_sub(self.bw);
            let mut s = x[i];
            for j in start..i {
                s -= self.data[i * w + (i - j)] * x[j];
            }
            x[i] = s / self.data[i * w];
        }
        // L^T x = y
        for i in (0..self.n).rev() {
            let end = (i + self.bw + 1).min(self.n);
            let mut s = x[i];
            for j in (i + 1)..end {
                s -= self.data[j * w + (j - i)] * x[j];
            }
            x[i] = s / self.data[i * w];
        }
        x
    }
}
