//! PCA whitening fit on training features only. Directions with negligible
//! eigenvalues are dropped rather than inflated, since inflating them would
//! amplify noise under the isotropic kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Affine transform `x -> (x - mean) * basis^T`. Rows of `basis` are
/// principal directions scaled by the inverse square roots of their
/// eigenvalues, so the fit data maps to (unbiased) identity covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhiteningTransform {
    pub mean: Vec<f64>,
    pub basis: Matrix,
    pub eps: f64,
}

impl WhiteningTransform {
    /// Output dimension (directions kept).
    pub fn out_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.basis.cols()
    }
}

/// Fits PCA whitening on `x`. Eigendirections of the sample covariance with
/// eigenvalue `<= eps * max_eigenvalue` are dropped, reducing the output
/// dimension.
pub fn fit_whitening(x: &Matrix, eps: f64) -> Result<WhiteningTransform> {
    let n = x.rows();
    let d = x.cols();
    if n < 2 {
        return Err(Error::Invalid(format!(
            "whitening needs at least 2 rows, got {n}"
        )));
    }
    let mean: Vec<f64> = (0..d)
        .map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let mut centered = Matrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            centered[(i, j)] = x[(i, j)] - mean[j];
        }
    }
    let mut cov = centered.transpose().matmul(&centered);
    let scale = 1.0 / (n - 1) as f64;
    for i in 0..d {
        for j in 0..d {
            cov[(i, j)] *= scale;
        }
    }

    let (eigenvalues, eigenvectors) = sym_eigen(&cov);
    let max_eig = eigenvalues.first().copied().unwrap_or(0.0);
    if max_eig <= 0.0 {
        return Err(Error::Invalid(
            "whitening found no direction with positive variance".into(),
        ));
    }
    let kept: Vec<usize> = (0..d).filter(|&k| eigenvalues[k] > eps * max_eig).collect();
    let mut basis = Matrix::zeros(kept.len(), d);
    for (row, &k) in kept.iter().enumerate() {
        let inv_sqrt = 1.0 / eigenvalues[k].sqrt();
        for j in 0..d {
            basis[(row, j)] = eigenvectors[(k, j)] * inv_sqrt;
        }
    }
    Ok(WhiteningTransform { mean, basis, eps })
}

/// Applies a fitted transform: `(x - mean) * basis^T`. Test data must use
/// the transform fit on the training set.
pub fn apply_whitening(t: &WhiteningTransform, x: &Matrix) -> Result<Matrix> {
    if x.cols() != t.in_dim() {
        return Err(Error::Shape(format!(
            "whitening expects {} input columns, got {}",
            t.in_dim(),
            x.cols()
        )));
    }
    let mut centered = Matrix::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            centered[(i, j)] = x[(i, j)] - t.mean[j];
        }
    }
    Ok(centered.matmul_transpose(&t.basis))
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// rows. Deterministic; eigenvector signs are normalized so the largest
/// component of each vector is positive.
pub fn sym_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    assert_eq!(a.rows(), a.cols(), "sym_eigen needs a square matrix");
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::identity(n);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-14 * m.max_abs().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a_idx, &b_idx| m[(b_idx, b_idx)].total_cmp(&m[(a_idx, a_idx)]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| m[(k, k)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (row, &k) in order.iter().enumerate() {
        let mut largest = 0.0f64;
        let mut sign = 1.0;
        for i in 0..n {
            if v[(i, k)].abs() > largest {
                largest = v[(i, k)].abs();
                sign = v[(i, k)].signum();
            }
        }
        for i in 0..n {
            eigenvectors[(row, i)] = v[(i, k)] * sign;
        }
    }
    (eigenvalues, eigenvectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn sample_cov(x: &Matrix) -> Matrix {
        let n = x.rows();
        let d = x.cols();
        let mean: Vec<f64> = (0..d)
            .map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64)
            .collect();
        let mut cov = Matrix::zeros(d, d);
        for i in 0..n {
            for a in 0..d {
                for b in 0..d {
                    cov[(a, b)] += (x[(i, a)] - mean[a]) * (x[(i, b)] - mean[b]);
                }
            }
        }
        for a in 0..d {
            for b in 0..d {
                cov[(a, b)] /= (n - 1) as f64;
            }
        }
        cov
    }

    #[test]
    fn jacobi_recovers_diagonal() {
        let a = Matrix::from_vec(2, 2, vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        let (vals, vecs) = sym_eigen(&a);
        assert!((vals[0] - 3.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        assert!((vecs[(0, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_known_2x2() {
        // [[2, 1], [1, 2]] has eigenvalues 3 and 1.
        let a = Matrix::from_vec(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let (vals, vecs) = sym_eigen(&a);
        assert!((vals[0] - 3.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        // Reconstruction: A = V^T diag V with rows as eigenvectors.
        for i in 0..2 {
            for j in 0..2 {
                let rec: f64 = (0..2).map(|k| vecs[(k, i)] * vals[k] * vecs[(k, j)]).sum();
                assert!((rec - a[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_dimensional_scaling() {
        // Data [-2, 0, 2] has unbiased variance 4, so whitening scales by 0.5.
        let x = Matrix::from_vec(3, 1, vec![-2.0, 0.0, 2.0]).unwrap();
        let t = fit_whitening(&x, 1e-8).unwrap();
        assert_eq!(t.out_dim(), 1);
        assert!((t.basis[(0, 0)].abs() - 0.5).abs() < 1e-12);
        let w = apply_whitening(&t, &x).unwrap();
        assert!((w[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!(w[(1, 0)].abs() < 1e-12);
    }

    #[test]
    fn whitened_data_has_identity_covariance() {
        let mut rng = StdRng::seed_from_u64(10);
        let n = 400;
        let mut x = Matrix::zeros(n, 3);
        for i in 0..n {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            let c: f64 = rng.random_range(-1.0..1.0);
            // Correlated mixture.
            x[(i, 0)] = 2.0 * a + 0.3 * b + 5.0;
            x[(i, 1)] = -a + 0.8 * b - 1.0;
            x[(i, 2)] = 0.5 * c + 0.2 * a;
        }
        let t = fit_whitening(&x, 1e-8).unwrap();
        assert_eq!(t.out_dim(), 3);
        let w = apply_whitening(&t, &x).unwrap();
        let cov = sample_cov(&w);
        for a in 0..3 {
            for b in 0..3 {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (cov[(a, b)] - expect).abs() < 1e-6,
                    "cov[{a}][{b}] = {}",
                    cov[(a, b)]
                );
            }
        }
    }

    #[test]
    fn rank_deficient_data_drops_direction() {
        let mut rng = StdRng::seed_from_u64(4);
        let n = 200;
        let mut x = Matrix::zeros(n, 3);
        for i in 0..n {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            // Third coordinate is a linear combination: data lies on a plane.
            x[(i, 0)] = a;
            x[(i, 1)] = b;
            x[(i, 2)] = 0.5 * a - 0.25 * b;
        }
        let t = fit_whitening(&x, 1e-8).unwrap();
        assert_eq!(t.out_dim(), 2);
        let w = apply_whitening(&t, &x).unwrap();
        let cov = sample_cov(&w);
        for a in 0..2 {
            for b in 0..2 {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((cov[(a, b)] - expect).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn mean_row_maps_to_zero() {
        let x = Matrix::from_vec(4, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 0.0, 7.0, 6.0]).unwrap();
        let t = fit_whitening(&x, 1e-8).unwrap();
        let mean_row = Matrix::from_vec(1, 2, t.mean.clone()).unwrap();
        let w = apply_whitening(&t, &mean_row).unwrap();
        for j in 0..w.cols() {
            assert!(w[(0, j)].abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_rows_is_error() {
        let x = Matrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(fit_whitening(&x, 1e-8).is_err());
    }
}
