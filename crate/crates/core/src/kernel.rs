//! Squared exponential kernel `k(xi, xj) = s^2 exp(-||xi - xj||^2 / (2 l^2))`
//! and the hyperparameter triple it shares with the observation noise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// Kernel scale `s`, kernel length `l`, and observation noise `sigma`,
/// stored in log domain so optimization is unconstrained and positivity is
/// structural.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub log_s: f64,
    pub log_l: f64,
    pub log_sigma: f64,
}

impl Hyperparameters {
    pub fn new(log_s: f64, log_l: f64, log_sigma: f64) -> Result<Self> {
        if !(log_s.is_finite() && log_l.is_finite() && log_sigma.is_finite()) {
            return Err(Error::Invalid(format!(
                "hyperparameters must be finite, got log_s={log_s}, log_l={log_l}, log_sigma={log_sigma}"
            )));
        }
        Ok(Hyperparameters {
            log_s,
            log_l,
            log_sigma,
        })
    }

    /// Builds from linear-domain values, which must be strictly positive.
    pub fn from_linear(s: f64, l: f64, sigma: f64) -> Result<Self> {
        if !(s > 0.0 && l > 0.0 && sigma > 0.0) {
            return Err(Error::Invalid(format!(
                "scale, length and noise must be positive, got s={s}, l={l}, sigma={sigma}"
            )));
        }
        Hyperparameters::new(s.ln(), l.ln(), sigma.ln())
    }

    pub fn s(&self) -> f64 {
        self.log_s.exp()
    }

    pub fn l(&self) -> f64 {
        self.log_l.exp()
    }

    pub fn sigma(&self) -> f64 {
        self.log_sigma.exp()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.log_s, self.log_l, self.log_sigma]
    }

    pub fn from_array(a: [f64; 3]) -> Result<Self> {
        Hyperparameters::new(a[0], a[1], a[2])
    }
}

/// Kernel value for a single pair of input vectors.
pub fn kernel_eval(xi: &[f64], xj: &[f64], hp: &Hyperparameters) -> Result<f64> {
    if xi.len() != xj.len() {
        return Err(Error::Shape(format!(
            "kernel inputs have dimensions {} and {}",
            xi.len(),
            xj.len()
        )));
    }
    let d2: f64 = xi
        .iter()
        .zip(xj.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let s = hp.s();
    let l = hp.l();
    Ok(s * s * (-d2 / (2.0 * l * l)).exp())
}

/// Pairwise squared Euclidean distances via the expanded form
/// `||a||^2 + ||b||^2 - 2 a.b`, clamped at zero against round-off.
pub fn squared_distances(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::Shape(format!(
            "inputs have feature dimensions {} and {}",
            a.cols(),
            b.cols()
        )));
    }
    let sq_a: Vec<f64> = (0..a.rows()).map(|i| dot(a.row(i), a.row(i))).collect();
    let sq_b: Vec<f64> = (0..b.rows()).map(|j| dot(b.row(j), b.row(j))).collect();
    let mut g = a.matmul_transpose(b);
    for i in 0..a.rows() {
        for j in 0..b.rows() {
            let d2 = sq_a[i] + sq_b[j] - 2.0 * g[(i, j)];
            g[(i, j)] = d2.max(0.0);
        }
    }
    Ok(g)
}

/// Kernel matrix with entry `(i, j) = k(row i of a, row j of b)`.
pub fn kernel_matrix(a: &Matrix, b: &Matrix, hp: &Hyperparameters) -> Result<Matrix> {
    Ok(kernel_from_sqdist(&squared_distances(a, b)?, hp))
}

/// Kernel matrix together with the squared distances it was built from.
/// The distance matrix reappears in the length-scale gradient.
pub fn kernel_and_sqdist(a: &Matrix, b: &Matrix, hp: &Hyperparameters) -> Result<(Matrix, Matrix)> {
    let d2 = squared_distances(a, b)?;
    let k = kernel_from_sqdist(&d2, hp);
    Ok((k, d2))
}

fn kernel_from_sqdist(d2: &Matrix, hp: &Hyperparameters) -> Matrix {
    let s = hp.s();
    let l = hp.l();
    let s2 = s * s;
    let inv_2l2 = 1.0 / (2.0 * l * l);
    let mut k = d2.clone();
    for i in 0..k.rows() {
        for j in 0..k.cols() {
            k[(i, j)] = s2 * (-k[(i, j)] * inv_2l2).exp();
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn hp(s: f64, l: f64) -> Hyperparameters {
        Hyperparameters::from_linear(s, l, 1.0).unwrap()
    }

    #[test]
    fn zero_distance_gives_s_squared() {
        let x = [0.3, -1.2];
        let v = kernel_eval(&x, &x, &hp(2.0, 1.0)).unwrap();
        assert_eq!(v, 4.0);
    }

    #[test]
    fn unit_case_matches_hand_value() {
        // ||xi - xj||^2 = 2, s = l = 1 => exp(-1)
        let v = kernel_eval(&[1.0, 0.0], &[0.0, 1.0], &hp(1.0, 1.0)).unwrap();
        assert!((v - 0.3678794411714423).abs() < 1e-12);
    }

    #[test]
    fn long_length_limit() {
        let v = kernel_eval(&[1.0, 0.0], &[0.0, 1.0], &hp(1.0, 1000.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-5);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        assert!(kernel_eval(&[1.0], &[1.0, 2.0], &hp(1.0, 1.0)).is_err());
        let a = Matrix::from_vec(1, 2, vec![0.0, 0.0]).unwrap();
        let b = Matrix::from_vec(1, 3, vec![0.0, 0.0, 0.0]).unwrap();
        assert!(kernel_matrix(&a, &b, &hp(1.0, 1.0)).is_err());
    }

    #[test]
    fn single_row_matrix() {
        let a = Matrix::from_vec(1, 2, vec![0.7, -0.1]).unwrap();
        let k = kernel_matrix(&a, &a, &hp(1.5, 2.0)).unwrap();
        assert_eq!(k.rows(), 1);
        assert_eq!(k[(0, 0)], 2.25);
    }

    #[test]
    fn identical_rows_give_constant_matrix() {
        let a = Matrix::from_vec(2, 2, vec![0.4, 1.0, 0.4, 1.0]).unwrap();
        let k = kernel_matrix(&a, &a, &hp(2.0, 0.7)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(k[(i, j)], 4.0);
            }
        }
    }

    #[test]
    fn matrix_matches_entrywise_eval() {
        let mut rng = StdRng::seed_from_u64(11);
        let data: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let a = Matrix::from_vec(3, 2, data).unwrap();
        let h = hp(1.3, 0.8);
        let k = kernel_matrix(&a, &a, &h).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let direct = kernel_eval(a.row(i), a.row(j), &h).unwrap();
                assert!(
                    (k[(i, j)] - direct).abs() <= 1e-10 * direct.max(1e-12),
                    "entry ({i},{j}): {} vs {}",
                    k[(i, j)],
                    direct
                );
            }
        }
    }

    #[test]
    fn kernel_matrix_is_symmetric_and_psd_diagonal_dominant() {
        let mut rng = StdRng::seed_from_u64(3);
        let data: Vec<f64> = (0..20).map(|_| rng.random_range(-2.0..2.0)).collect();
        let a = Matrix::from_vec(10, 2, data).unwrap();
        let k = kernel_matrix(&a, &a, &hp(1.0, 1.0)).unwrap();
        assert!(k.is_symmetric(0.0));
        for i in 0..10 {
            for j in 0..10 {
                assert!(k[(i, j)] <= k[(i, i)] + 1e-15);
            }
        }
    }
}
