//! Significance tests for comparing systems on the same test items: the
//! two-tailed paired t-test on per-item losses, and Steiger's Z1* test for
//! two dependent correlations sharing the reference variable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::std_normal_cdf;

/// Outcome of a two-tailed significance test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    /// Set when the inputs left the statistic undefined (e.g. a paired test
    /// with zero-variance differences) and a boundary p-value was reported.
    pub degenerate: bool,
}

/// Two-tailed paired t-test on per-item losses from two systems.
///
/// `t = mean(d) / (sd(d) / sqrt(M))` with `d = a - b` and unbiased `sd`;
/// p comes from Student's t with `M - 1` degrees of freedom. Zero-variance
/// differences are legitimate (a system compared with itself), so they
/// yield flagged boundary p-values rather than errors.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "paired test inputs have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let m = a.len();
    if m < 2 {
        return Err(Error::Invalid(
            "paired t-test needs at least 2 items".into(),
        ));
    }
    let d: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / m as f64;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
    if var == 0.0 {
        return Ok(if mean == 0.0 {
            TestResult {
                statistic: 0.0,
                p_value: 1.0,
                n: m,
                degenerate: true,
            }
        } else {
            TestResult {
                statistic: mean.signum() * f64::INFINITY,
                p_value: 0.0,
                n: m,
                degenerate: true,
            }
        });
    }
    let t = mean / (var.sqrt() / (m as f64).sqrt());
    let p = 2.0 * (1.0 - t_cdf(t.abs(), m - 1));
    Ok(TestResult {
        statistic: t,
        p_value: p.clamp(0.0, 1.0),
        n: m,
        degenerate: false,
    })
}

/// Steiger's Z1* test for the difference of two dependent correlations that
/// share one variable (Steiger 1980, with the Dunn & Clark z transform and
/// the pooled-correlation simplification).
///
/// With `z_k = atanh(r_kref)` and `rm = (r_1ref + r_2ref) / 2`:
///
/// ```text
/// psi  = r_12 (1 - 2 rm^2) - rm^2 (1 - 2 rm^2 - r_12^2) / 2
/// sbar = psi / (1 - rm^2)^2
/// Z    = (z_1 - z_2) sqrt((n - 3) / (2 - 2 sbar))
/// ```
///
/// `sbar` is the correlation between the two transformed sample
/// correlations; p is two-tailed standard normal. The formula is validated
/// against a Monte-Carlo simulation of the null in this module's tests.
pub fn steiger_z1(r_1ref: f64, r_2ref: f64, r_12: f64, n: usize) -> Result<TestResult> {
    for (name, r) in [("r_1ref", r_1ref), ("r_2ref", r_2ref), ("r_12", r_12)] {
        if !(r.is_finite() && r.abs() < 1.0) {
            return Err(Error::Invalid(format!("{name} = {r} is outside (-1, 1)")));
        }
    }
    if n < 4 {
        return Err(Error::Invalid("Z1* needs at least 4 samples".into()));
    }
    let z1 = r_1ref.atanh();
    let z2 = r_2ref.atanh();
    let rm = 0.5 * (r_1ref + r_2ref);
    let rm2 = rm * rm;
    let psi = r_12 * (1.0 - 2.0 * rm2) - 0.5 * rm2 * (1.0 - 2.0 * rm2 - r_12 * r_12);
    let sbar = psi / ((1.0 - rm2) * (1.0 - rm2));
    let denom = (2.0 - 2.0 * sbar).max(1e-15);
    let z = (z1 - z2) * ((n as f64 - 3.0) / denom).sqrt();
    let p = 2.0 * (1.0 - std_normal_cdf(z.abs()));
    Ok(TestResult {
        statistic: z,
        p_value: p.clamp(0.0, 1.0),
        n,
        degenerate: false,
    })
}

/// Student's t cumulative distribution via the regularized incomplete beta
/// function.
pub fn t_cdf(t: f64, df: usize) -> f64 {
    debug_assert!(df >= 1);
    let v = df as f64;
    let x = v / (v + t * t);
    let tail = 0.5 * inc_beta_reg(0.5 * v, 0.5, x);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// ln Gamma by the Lanczos approximation (g = 7, 9 terms).
pub(crate) fn ln_gamma(x: f64) -> f64 {
    // Published Lanczos coefficients, kept digit-for-digit.
    #[allow(clippy::excessive_precision)]
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

/// Regularized incomplete beta function `I_x(a, b)` by the continued
/// fraction of the incomplete beta, split at the symmetry point.
pub(crate) fn inc_beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Continued fraction for the incomplete beta, modified Lentz iteration.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    const EPS: f64 = 3e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Normal};

    #[test]
    fn t_cdf_center_and_normal_limit() {
        assert_eq!(t_cdf(0.0, 1), 0.5);
        assert_eq!(t_cdf(0.0, 50), 0.5);
        assert!((t_cdf(1.96, 2_000_000) - std_normal_cdf(1.96)).abs() < 1e-5);
    }

    #[test]
    fn t_cdf_table_value() {
        // Classic t-table: P(T <= 2.228 | df = 10) = 0.975.
        assert!((t_cdf(2.228, 10) - 0.975).abs() < 1e-3);
        // And the df = 4 97.5% point, 2.776.
        assert!((t_cdf(2.776, 4) - 0.975).abs() < 1e-3);
    }

    #[test]
    fn t_cdf_matches_reference_library() {
        use statrs::distribution::ContinuousCDF;
        for &df in &[1usize, 2, 5, 10, 30, 100] {
            let dist = statrs::distribution::StudentsT::new(0.0, 1.0, df as f64).unwrap();
            for i in -40..=40 {
                let t = i as f64 * 0.25;
                let ours = t_cdf(t, df);
                let theirs = dist.cdf(t);
                assert!(
                    (ours - theirs).abs() < 1e-8,
                    "df={df}, t={t}: {ours} vs {theirs}"
                );
            }
        }
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-13);
        assert!((ln_gamma(2.0)).abs() < 1e-13);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn paired_t_identical_inputs_flagged() {
        let a = [0.3, 0.5, 0.9];
        let r = paired_t_test(&a, &a).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn paired_t_constant_nonzero_difference_flagged() {
        let a = [1.0, 2.0, 3.0];
        let b = [0.0, 1.0, 2.0];
        let r = paired_t_test(&a, &b).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 0.0);
        assert!(r.statistic.is_infinite() && r.statistic > 0.0);
    }

    #[test]
    fn paired_t_symmetric_differences() {
        let a = [1.0, 0.0, 1.0, 0.0];
        let b = [0.0, 1.0, 0.0, 1.0];
        let r = paired_t_test(&a, &b).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn paired_t_worked_example_against_oracle() {
        use statrs::distribution::ContinuousCDF;
        // d = [1.1, 0.9, 1.0, 1.2, 0.8]: t = 1.0 / (sqrt(0.025)/sqrt(5)).
        let a = [1.1, 0.9, 1.0, 1.2, 0.8];
        let b = [0.0; 5];
        let r = paired_t_test(&a, &b).unwrap();
        assert!((r.statistic - 14.142135623730951).abs() < 1e-9);
        let dist = statrs::distribution::StudentsT::new(0.0, 1.0, 4.0).unwrap();
        let oracle_p = 2.0 * (1.0 - dist.cdf(r.statistic));
        assert!(
            (r.p_value - oracle_p).abs() <= 0.1 * oracle_p,
            "{} vs {}",
            r.p_value,
            oracle_p
        );
        assert!(r.p_value > 1e-4 && r.p_value < 2e-4, "p = {}", r.p_value);
    }

    #[test]
    fn paired_t_antisymmetry() {
        let a = [2.0, 3.5, 1.0, 4.0, 2.5];
        let b = [1.5, 3.0, 2.0, 3.0, 2.0];
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        assert_eq!(ab.statistic, -ba.statistic);
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn paired_t_null_calibration() {
        // Exchangeable systems: rejection at 5% should occur in about 5%
        // of simulations.
        let mut rng = StdRng::seed_from_u64(314159);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let sims = 10_000;
        let m = 20;
        let mut rejections = 0;
        for _ in 0..sims {
            let a: Vec<f64> = (0..m).map(|_| normal.sample(&mut rng)).collect();
            let b: f64 = 0.0;
            let zeros = vec![b; m];
            let r = paired_t_test(&a, &zeros).unwrap();
            if r.p_value < 0.05 {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / sims as f64;
        assert!(
            (rate - 0.05).abs() <= 0.015,
            "null rejection rate {rate} outside 5% +/- 1.5%"
        );
    }

    #[test]
    fn steiger_equal_correlations_give_p_one() {
        let r = steiger_z1(0.4, 0.4, 0.3, 50).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn steiger_dependence_sharpens_comparison() {
        let weak = steiger_z1(0.5, 0.3, 0.0, 60).unwrap();
        let strong = steiger_z1(0.5, 0.3, 0.95, 60).unwrap();
        assert!(strong.statistic.abs() > weak.statistic.abs());
        assert!(strong.p_value < weak.p_value);
    }

    #[test]
    fn steiger_antisymmetry() {
        let ab = steiger_z1(0.6, 0.2, 0.4, 80).unwrap();
        let ba = steiger_z1(0.2, 0.6, 0.4, 80).unwrap();
        assert!((ab.statistic + ba.statistic).abs() < 1e-12);
        assert!((ab.p_value - ba.p_value).abs() < 1e-12);
    }

    #[test]
    fn steiger_rejects_degenerate_correlations() {
        assert!(steiger_z1(1.0, 0.5, 0.2, 50).is_err());
        assert!(steiger_z1(0.5, 0.5, 1.0, 50).is_err());
        assert!(steiger_z1(0.5, 0.4, 0.2, 3).is_err());
    }

    #[test]
    fn steiger_worked_case_frozen() {
        // r1 = 0.5, r2 = 0.3, r12 = 0.4, n = 103:
        // psi = 0.4 * 0.68 - 0.08 * 0.52 = 0.2304, sbar = 0.2304 / 0.7056,
        // Z = (atanh(0.5) - atanh(0.3)) * sqrt(100 / 1.3469...)
        let r = steiger_z1(0.5, 0.3, 0.4, 103).unwrap();
        assert!(
            (r.statistic - 2.0660977919).abs() < 1e-9,
            "Z = {}",
            r.statistic
        );
        assert!((r.p_value - 0.0388192467).abs() < 1e-9, "p = {}", r.p_value);
    }

    /// Draws correlated triples (system A score, system B score, reference)
    /// and returns the three sample correlations.
    fn sample_correlations(
        rho_shared: f64,
        rho_12: f64,
        n: usize,
        rng: &mut StdRng,
    ) -> (f64, f64, f64) {
        // Covariance [[1, rho_12, rho], [rho_12, 1, rho], [rho, rho, 1]]
        // via its Cholesky factor.
        let c = crate::matrix::Matrix::from_vec(
            3,
            3,
            vec![
                1.0, rho_12, rho_shared, rho_12, 1.0, rho_shared, rho_shared, rho_shared, 1.0,
            ],
        )
        .unwrap();
        let f = crate::chol::cholesky(&c, 0.0).unwrap();
        let l = f.lower();
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut xs = vec![0.0; n];
        let mut ys = vec![0.0; n];
        let mut zs = vec![0.0; n];
        for i in 0..n {
            let e: [f64; 3] = [normal.sample(rng), normal.sample(rng), normal.sample(rng)];
            xs[i] = l[(0, 0)] * e[0];
            ys[i] = l[(1, 0)] * e[0] + l[(1, 1)] * e[1];
            zs[i] = l[(2, 0)] * e[0] + l[(2, 1)] * e[1] + l[(2, 2)] * e[2];
        }
        let r1 = crate::metrics::pcc(&xs, &zs).unwrap();
        let r2 = crate::metrics::pcc(&ys, &zs).unwrap();
        let r12 = crate::metrics::pcc(&xs, &ys).unwrap();
        (r1, r2, r12)
    }

    #[test]
    fn steiger_matches_monte_carlo_null() {
        // The closed form claims Z ~ N(0, 1) under the null, so the
        // closed-form p of an observed statistic must match the simulated
        // tail probability. One configuration here; the acceptance suite
        // sweeps five.
        let mut rng = StdRng::seed_from_u64(777);
        let (rho, r12_true, n) = (0.4, 0.5, 80);
        let observed = steiger_z1(0.52, 0.30, 0.5, n).unwrap();
        let sims = 20_000;
        let mut exceed = 0;
        for _ in 0..sims {
            let (r1, r2, r12) = sample_correlations(rho, r12_true, n, &mut rng);
            let sim = steiger_z1(r1, r2, r12, n).unwrap();
            if sim.statistic.abs() >= observed.statistic.abs() {
                exceed += 1;
            }
        }
        let mc_p = exceed as f64 / sims as f64;
        assert!(
            (observed.p_value - mc_p).abs() <= 0.15 * mc_p,
            "closed form {} vs Monte Carlo {}",
            observed.p_value,
            mc_p
        );
    }

    #[test]
    fn inc_beta_symmetry_and_bounds() {
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..100 {
            let a: f64 = rng.random_range(0.5..20.0);
            let b: f64 = rng.random_range(0.5..20.0);
            let x: f64 = rng.random_range(0.0..1.0);
            let v = inc_beta_reg(a, b, x);
            assert!((0.0..=1.0).contains(&v));
            // I_x(a,b) = 1 - I_{1-x}(b,a)
            let sym = 1.0 - inc_beta_reg(b, a, 1.0 - x);
            assert!((v - sym).abs() < 1e-10, "a={a} b={b} x={x}: {v} vs {sym}");
        }
    }
}
