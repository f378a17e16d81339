//! Cholesky factorization with jitter escalation, plus the solves and
//! log-determinants built on top of it.
//!
//! Kernel matrices over near-duplicate inputs are routinely singular to
//! working precision, so factorization retries with the jitter scaled up
//! tenfold per attempt, capped at `1e-2 * trace(A) / dim`. The factor records
//! the jitter that actually succeeded.

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// Multiple of `trace(A)/dim` used as the default jitter for kernel matrices.
pub const BASE_JITTER_SCALE: f64 = 1e-10;
/// Multiple of `trace(A)/dim` at which jitter escalation gives up.
pub const MAX_JITTER_SCALE: f64 = 1e-2;

/// Lower-triangular factor `L` with `A + jitter_used * I = L * L^T`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: Matrix,
    jitter_used: f64,
}

/// Default jitter for a matrix about to be factored: `1e-10 * trace / dim`.
pub fn base_jitter(a: &Matrix) -> f64 {
    if a.rows() == 0 {
        return 0.0;
    }
    BASE_JITTER_SCALE * a.trace() / a.rows() as f64
}

/// Factors `A + jitter * I`. On failure the jitter escalates tenfold per
/// attempt (starting from the default base when called with zero) until
/// `1e-2 * trace(A)/dim`.
pub fn cholesky(a: &Matrix, jitter: f64) -> Result<CholeskyFactor> {
    if a.rows() != a.cols() {
        return Err(Error::Shape(format!(
            "cholesky needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::Numeric(
            "cholesky input has non-finite entries".into(),
        ));
    }
    if !a.is_symmetric(1e-10) {
        return Err(Error::Invalid("cholesky input is not symmetric".into()));
    }

    let dim = a.rows();
    let escalation_base = base_jitter(a);
    let cap = MAX_JITTER_SCALE * a.trace() / dim.max(1) as f64;

    let mut current = jitter;
    loop {
        let minor = match attempt(a, current) {
            Ok(lower) => {
                return Ok(CholeskyFactor {
                    lower,
                    jitter_used: current,
                })
            }
            Err(minor) => minor,
        };
        let next = if current > 0.0 {
            current * 10.0
        } else {
            escalation_base
        };
        if next <= current || next > cap {
            return Err(Error::NotPositiveDefinite {
                minor,
                max_jitter: current,
            });
        }
        current = next;
    }
}

/// One factorization attempt. Returns the 1-based order of the first
/// non-positive leading minor on failure.
fn attempt(a: &Matrix, jitter: f64) -> std::result::Result<Matrix, usize> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            if i == j {
                sum += jitter;
            }
            // Row slices of L are contiguous, so this dot streams well.
            sum -= dot(&l.row(i)[..j], &l.row(j)[..j]);
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(i + 1);
                }
                l[(i, i)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    /// Jitter added to the diagonal by the successful attempt.
    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    /// Solves `L x = b` by forward substitution.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.dim(), "forward substitution size mismatch");
        let n = self.dim();
        let mut x = vec![0.0; n];
        for i in 0..n {
            let s = dot(&self.lower.row(i)[..i], &x[..i]);
            x[i] = (b[i] - s) / self.lower[(i, i)];
        }
        x
    }

    /// Solves `L^T x = b` by back substitution.
    pub fn backward(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.dim(), "back substitution size mismatch");
        let n = self.dim();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = 0.0;
            for (k, &xk) in x.iter().enumerate().skip(i + 1) {
                s += self.lower[(k, i)] * xk;
            }
            x[i] = (b[i] - s) / self.lower[(i, i)];
        }
        x
    }

    /// Solves `A x = b` for the factored `A`.
    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix) -> Matrix {
        assert_eq!(b.rows(), self.dim(), "solve_matrix row count mismatch");
        let n = self.dim();
        let m = b.cols();
        let mut out = Matrix::zeros(n, m);
        let mut col = vec![0.0; n];
        for j in 0..m {
            for i in 0..n {
                col[i] = b[(i, j)];
            }
            let x = self.solve_vec(&col);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        out
    }

    /// `A^{-1}` for the factored `A`.
    pub fn inverse(&self) -> Matrix {
        self.solve_matrix(&Matrix::identity(self.dim()))
    }

    /// `log det(A) = 2 * sum(log diag(L))`.
    pub fn logdet(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.lower[(i, i)].ln())
            .sum::<f64>()
            * 2.0
    }
}
