//! Gaussian densities and the standard normal CDF.
//!
//! The CDF goes through Cody's rational Chebyshev approximation for
//! erf/erfc (W. J. Cody, Math. Comp. 23, 1969), which holds double
//! precision over the whole real line without external dependencies.

use std::f64::consts::{PI, TAU};

use crate::chol::CholeskyFactor;
use crate::error::{Error, Result};

/// Log-density of a univariate normal.
pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (TAU * var).ln() - d * d / (2.0 * var)
}

/// Log-density of `N(y; mean, A)` given the Cholesky factor of `A`.
pub fn gaussian_logpdf(y: &[f64], mean: &[f64], cov_factor: &CholeskyFactor) -> Result<f64> {
    let n = cov_factor.dim();
    if y.len() != n || mean.len() != n {
        return Err(Error::Shape(format!(
            "gaussian_logpdf got y of length {}, mean of length {}, factor of dim {}",
            y.len(),
            mean.len(),
            n
        )));
    }
    let centered: Vec<f64> = y.iter().zip(mean.iter()).map(|(a, b)| a - b).collect();
    let v = cov_factor.forward(&centered);
    let quad: f64 = v.iter().map(|x| x * x).sum();
    Ok(-0.5 * quad - 0.5 * cov_factor.logdet() - 0.5 * n as f64 * TAU.ln())
}

/// Standard normal CDF, accurate to better than 1e-10 absolute.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

// Cody's published coefficients, kept digit-for-digit.
#[allow(clippy::excessive_precision)]
const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
#[allow(clippy::excessive_precision)]
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
#[allow(clippy::excessive_precision)]
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
#[allow(clippy::excessive_precision)]
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
#[allow(clippy::excessive_precision)]
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
#[allow(clippy::excessive_precision)]
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];
#[allow(clippy::excessive_precision)]
const INV_SQRT_PI: f64 = 5.6418958354775628695e-1;

/// erf on |x| <= 0.46875.
fn erf_small(x: f64) -> f64 {
    let y = x.abs();
    let ysq = if y > 1e-300 { y * y } else { 0.0 };
    let mut num = ERF_A[4] * ysq;
    let mut den = ysq;
    for i in 0..3 {
        num = (num + ERF_A[i]) * ysq;
        den = (den + ERF_B[i]) * ysq;
    }
    x * (num + ERF_A[3]) / (den + ERF_B[3])
}

/// exp(-y^2) evaluated with the argument split on a 1/16 grid, which keeps
/// the product with the rational part accurate in the far tail.
fn exp_neg_ysq(y: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

/// erfc for y in (0.46875, 4].
fn erfc_mid(y: f64) -> f64 {
    let mut num = ERF_C[8] * y;
    let mut den = y;
    for i in 0..7 {
        num = (num + ERF_C[i]) * y;
        den = (den + ERF_D[i]) * y;
    }
    exp_neg_ysq(y) * (num + ERF_C[7]) / (den + ERF_D[7])
}

/// erfc for y > 4.
fn erfc_large(y: f64) -> f64 {
    if y > 26.6 {
        // Underflows double precision.
        return 0.0;
    }
    let ysq = 1.0 / (y * y);
    let mut num = ERF_P[5] * ysq;
    let mut den = ysq;
    for i in 0..4 {
        num = (num + ERF_P[i]) * ysq;
        den = (den + ERF_Q[i]) * ysq;
    }
    let r = ysq * (num + ERF_P[4]) / (den + ERF_Q[4]);
    exp_neg_ysq(y) * (INV_SQRT_PI - r) / y
}

pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    let result = if y <= 0.46875 {
        1.0 - erf_small(x.abs())
    } else if y <= 4.0 {
        erfc_mid(y)
    } else {
        erfc_large(y)
    };
    if x < 0.0 {
        2.0 - result
    } else {
        result
    }
}

pub fn erf(x: f64) -> f64 {
    if x.abs() <= 0.46875 {
        erf_small(x)
    } else if x > 0.0 {
        1.0 - erfc(x)
    } else {
        erfc(-x) - 1.0
    }
}

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chol::cholesky;
    use crate::matrix::Matrix;

    #[test]
    fn cdf_at_zero_is_half() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
    }

    #[test]
    fn cdf_hits_table_values() {
        // Classic two-sided 95% point.
        assert!((std_normal_cdf(1.959964) - 0.975).abs() < 1e-6);
        // Values cross-checked against a high-precision table.
        assert!((std_normal_cdf(1.0) - 0.8413447460685429).abs() < 1e-12);
        assert!((std_normal_cdf(-1.0) - 0.15865525393145705).abs() < 1e-12);
        assert!((std_normal_cdf(2.5) - 0.9937903346742238).abs() < 1e-12);
        assert!((std_normal_cdf(-3.0) - 1.3498980316300945e-3).abs() < 1e-14);
        assert!((std_normal_cdf(5.0) - 0.9999997133484281).abs() < 1e-13);
    }

    #[test]
    fn cdf_far_tail() {
        assert!(std_normal_cdf(-8.0) < 1e-14);
        assert!(std_normal_cdf(-8.0) > 0.0);
        assert_eq!(std_normal_cdf(40.0), 1.0);
    }

    #[test]
    fn cdf_complement_symmetry() {
        for i in 0..200 {
            let z = -6.0 + i as f64 * 0.06;
            let sum = std_normal_cdf(z) + std_normal_cdf(-z);
            assert!((sum - 1.0).abs() < 1e-14, "z={z}: {sum}");
        }
    }

    #[test]
    fn cdf_monotone_on_grid() {
        let mut prev = std_normal_cdf(-10.0);
        for i in 1..10_000 {
            let z = -10.0 + 20.0 * i as f64 / 9_999.0;
            let cur = std_normal_cdf(z);
            assert!(cur >= prev, "not monotone at z={z}");
            prev = cur;
        }
    }

    #[test]
    fn logpdf_standard_scalar() {
        let f = cholesky(&Matrix::identity(1), 0.0).unwrap();
        let v = gaussian_logpdf(&[0.0], &[0.0], &f).unwrap();
        assert!((v + 0.5 * (2.0 * PI).ln()).abs() < 1e-14);
    }

    #[test]
    fn logpdf_scalar_hand_case() {
        // N(1; 0, 2): -0.5 ln(4 pi) - 1/4
        let f = cholesky(&Matrix::from_vec(1, 1, vec![2.0]).unwrap(), 0.0).unwrap();
        let v = gaussian_logpdf(&[1.0], &[0.0], &f).unwrap();
        let expected = -0.5 * (4.0 * PI).ln() - 0.25;
        assert!((v - expected).abs() < 1e-13);
        assert!((v + 1.5155121234846454).abs() < 1e-6);
    }

    #[test]
    fn logpdf_diagonal_factorizes() {
        let a = Matrix::from_vec(3, 3, vec![2.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 3.0]).unwrap();
        let f = cholesky(&a, 0.0).unwrap();
        let y = [0.3, -1.0, 2.2];
        let m = [0.1, 0.0, -0.4];
        let joint = gaussian_logpdf(&y, &m, &f).unwrap();
        let sum: f64 = (0..3).map(|i| normal_logpdf(y[i], m[i], a[(i, i)])).sum();
        assert!((joint - sum).abs() < 1e-10);
    }
}
