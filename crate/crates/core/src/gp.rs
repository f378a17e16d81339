//! The three GP regression variants over multi-rater data.
//!
//! `Base` is a standard GP on one target per input (the per-row mean when
//! rows carry several ratings). `Repeat` is the naive multi-rating
//! construction: every input row is repeated once per rating, so the kernel
//! grows to `sum(R_i)` rows and factorization costs `O((NR)^3)`. `Joint`
//! re-parameterizes the ratings of each row by their mean and biased standard
//! deviation: the rating mean is modeled by a GP whose noise shrinks to
//! `sigma^2 / R_i`, and the spread enters through an input-independent factor
//! `g(Y)`. The two formulations have identical marginal likelihoods and
//! predictive densities; `Joint` factors only an `N x N` matrix.
//!
//! Jitter is never added up front here: the observation noise keeps the
//! factored matrices positive definite, and silently mismatched jitter would
//! break the exact `Joint`/`Repeat` agreement. The escalation ladder inside
//! `cholesky` remains as a fallback for extreme hyperparameters.

use std::f64::consts::TAU;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chol::{cholesky, CholeskyFactor};
use crate::dataset::{summarize_ratings, Dataset, RatingSummary};
use crate::error::{Error, Result};
use crate::gauss::{gaussian_logpdf, normal_logpdf};
use crate::kernel::{kernel_eval, kernel_matrix, Hyperparameters};
use crate::matrix::{dot, Matrix};

/// Which marginal-likelihood formulation a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Base,
    Joint,
    Repeat,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Variant::Base => "base",
            Variant::Joint => "joint",
            Variant::Repeat => "repeat",
        };
        f.write_str(s)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Variant::Base),
            "joint" => Ok(Variant::Joint),
            "repeat" => Ok(Variant::Repeat),
            other => Err(Error::Invalid(format!(
                "unknown variant '{other}', expected base, joint or repeat"
            ))),
        }
    }
}

/// The Gaussian-regression problem a variant reduces the dataset to:
/// features (expanded for `Repeat`), one target per effective row, and the
/// per-row noise variance added to the kernel diagonal.
pub(crate) struct EffectiveGp {
    pub features: Matrix,
    pub targets: Vec<f64>,
    pub noise: Vec<f64>,
    pub rater_counts: Vec<usize>,
}

pub(crate) fn effective_gp(ds: &Dataset, variant: Variant, hp: &Hyperparameters) -> EffectiveGp {
    let summary = summarize_ratings(ds);
    let sigma2 = hp.sigma() * hp.sigma();
    match variant {
        Variant::Base => EffectiveGp {
            features: ds.features().clone(),
            noise: vec![sigma2; ds.len()],
            targets: summary.mu_bar,
            rater_counts: summary.r_counts,
        },
        Variant::Joint => EffectiveGp {
            features: ds.features().clone(),
            noise: summary
                .r_counts
                .iter()
                .map(|&r| sigma2 / r as f64)
                .collect(),
            targets: summary.mu_bar,
            rater_counts: summary.r_counts,
        },
        Variant::Repeat => {
            let total = ds.total_ratings();
            let mut features = Matrix::zeros(total, ds.dim());
            let mut targets = Vec::with_capacity(total);
            let mut row = 0;
            for (i, ratings) in ds.ratings().iter().enumerate() {
                for &y in ratings {
                    let src = ds.features().row(i);
                    for (j, &v) in src.iter().enumerate() {
                        features[(row, j)] = v;
                    }
                    targets.push(y);
                    row += 1;
                }
            }
            EffectiveGp {
                features,
                targets,
                noise: vec![sigma2; total],
                rater_counts: summary.r_counts,
            }
        }
    }
}

/// `log N(targets; 0, K(features) + diag(noise))`.
fn loglik_gaussian(
    features: &Matrix,
    targets: &[f64],
    noise: &[f64],
    hp: &Hyperparameters,
) -> Result<f64> {
    let mut c = kernel_matrix(features, features, hp)?;
    c.add_to_diagonal(noise);
    let chol = cholesky(&c, 0.0)?;
    gaussian_logpdf(targets, &vec![0.0; targets.len()], &chol)
}

/// Marginal log-likelihood of a standard GP: `log N(y; 0, K + sigma^2 I)`.
/// For multi-rater data the caller passes the per-row rating mean as `y`.
pub fn loglik_base(x: &Matrix, y: &[f64], hp: &Hyperparameters) -> Result<f64> {
    if y.len() != x.rows() {
        return Err(Error::Shape(format!(
            "{} targets for {} input rows",
            y.len(),
            x.rows()
        )));
    }
    let sigma2 = hp.sigma() * hp.sigma();
    loglik_gaussian(x, y, &vec![sigma2; y.len()], hp)
}

/// Marginal log-likelihood of the naive construction: inputs repeated once
/// per rating (row-major flattening), full `sum(R_i)`-dimensional kernel.
pub fn loglik_repeat(ds: &Dataset, hp: &Hyperparameters) -> Result<f64> {
    let eff = effective_gp(ds, Variant::Repeat, hp);
    loglik_gaussian(&eff.features, &eff.targets, &eff.noise, hp)
}

/// Joint marginal log-likelihood of all ratings:
/// `log N(mu_bar; 0, K + diag(sigma^2 / R_i)) + log g(Y)`.
pub fn loglik_joint(ds: &Dataset, hp: &Hyperparameters) -> Result<f64> {
    let eff = effective_gp(ds, Variant::Joint, hp);
    let gaussian = loglik_gaussian(&eff.features, &eff.targets, &eff.noise, hp)?;
    let summary = summarize_ratings(ds);
    Ok(gaussian + log_g(&summary, hp.sigma()))
}

/// The rating-dependent, input-independent factor of the joint marginal
/// likelihood, per row:
///
/// `log N(eta_i; 0, sigma^2/R_i) + (2 - R_i)/2 * log(2 pi sigma^2) - log R_i`
///
/// For `R_i = 1` the row term cancels to exactly zero, which reduces the
/// joint likelihood to the base one bit-for-bit.
pub(crate) fn log_g(summary: &RatingSummary, sigma: f64) -> f64 {
    let sigma2 = sigma * sigma;
    let mut total = 0.0;
    for i in 0..summary.mu_bar.len() {
        let r = summary.r_counts[i] as f64;
        let v = sigma2 / r;
        total += normal_logpdf(summary.eta_bar[i], 0.0, v) + 0.5 * (2.0 - r) * (TAU * sigma2).ln()
            - r.ln();
    }
    total
}

/// `d log g / d log sigma`, analytic: per row `-1 + R_i eta_i^2 / sigma^2 + (2 - R_i)`.
pub(crate) fn log_g_grad_log_sigma(summary: &RatingSummary, sigma: f64) -> f64 {
    let sigma2 = sigma * sigma;
    summary
        .r_counts
        .iter()
        .zip(summary.eta_bar.iter())
        .map(|(&r, &eta)| {
            let r = r as f64;
            -1.0 + r * eta * eta / sigma2 + (2.0 - r)
        })
        .sum()
}

/// A fitted model: hyperparameters plus the cached factorization needed for
/// prediction. Immutable after `fit`; `predict` is read-only.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    variant: Variant,
    hp: Hyperparameters,
    train_features: Matrix,
    effective_targets: Vec<f64>,
    noise_scale: Vec<f64>,
    rater_counts: Vec<usize>,
    chol: CholeskyFactor,
    alpha: Vec<f64>,
}

/// Per-test-point Gaussian predictive density over outputs. `var` is the
/// output variance (`latent_var + sigma^2`); `latent_var` is the variance of
/// the latent function value, clamped at zero against round-off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveDensity {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub latent_var: Vec<f64>,
}

impl PredictiveDensity {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Fits a model at fixed hyperparameters: builds the effective problem for
/// the variant, factors `K + diag(noise)`, and caches the solved weights.
pub fn fit(ds: &Dataset, variant: Variant, hp: &Hyperparameters) -> Result<TrainedModel> {
    let eff = effective_gp(ds, variant, hp);
    TrainedModel::from_parts(
        variant,
        *hp,
        eff.features,
        eff.targets,
        eff.noise,
        eff.rater_counts,
    )
}

impl TrainedModel {
    /// Rebuilds a model from its stored parts, refactorizing the kernel.
    /// Deterministic: identical parts give identical predictions.
    pub fn from_parts(
        variant: Variant,
        hp: Hyperparameters,
        train_features: Matrix,
        effective_targets: Vec<f64>,
        noise_scale: Vec<f64>,
        rater_counts: Vec<usize>,
    ) -> Result<Self> {
        let n = train_features.rows();
        if effective_targets.len() != n || noise_scale.len() != n {
            return Err(Error::Shape(format!(
                "model parts disagree: {} feature rows, {} targets, {} noise entries",
                n,
                effective_targets.len(),
                noise_scale.len()
            )));
        }
        let mut c = kernel_matrix(&train_features, &train_features, &hp)?;
        c.add_to_diagonal(&noise_scale);
        let chol = cholesky(&c, 0.0)?;
        let alpha = chol.solve_vec(&effective_targets);
        if !alpha.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("solved weights are not finite".into()));
        }
        Ok(TrainedModel {
            variant,
            hp,
            train_features,
            effective_targets,
            noise_scale,
            rater_counts,
            chol,
            alpha,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn hp(&self) -> &Hyperparameters {
        &self.hp
    }

    pub fn train_features(&self) -> &Matrix {
        &self.train_features
    }

    pub fn effective_targets(&self) -> &[f64] {
        &self.effective_targets
    }

    pub fn noise_scale(&self) -> &[f64] {
        &self.noise_scale
    }

    pub fn rater_counts(&self) -> &[usize] {
        &self.rater_counts
    }

    pub fn chol(&self) -> &CholeskyFactor {
        &self.chol
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Predictive density at the given test inputs.
    pub fn predict(&self, xhat: &Matrix) -> Result<PredictiveDensity> {
        if xhat.cols() != self.train_features.cols() {
            return Err(Error::Shape(format!(
                "test inputs have dimension {}, model was trained on {}",
                xhat.cols(),
                self.train_features.cols()
            )));
        }
        let k_cross = kernel_matrix(xhat, &self.train_features, &self.hp)?;
        let sigma2 = self.hp.sigma() * self.hp.sigma();
        let m = xhat.rows();
        let mut mean = Vec::with_capacity(m);
        let mut var = Vec::with_capacity(m);
        let mut latent_var = Vec::with_capacity(m);
        for i in 0..m {
            let k_i = k_cross.row(i);
            mean.push(dot(k_i, &self.alpha));
            let prior = kernel_eval(xhat.row(i), xhat.row(i), &self.hp)?;
            let v = self.chol.forward(k_i);
            let explained: f64 = v.iter().map(|x| x * x).sum();
            let raw = prior - explained;
            if raw < 0.0 {
                log::debug!("latent variance {raw:.3e} clamped to 0 at test point {i}");
            }
            let lat = raw.max(0.0);
            latent_var.push(lat);
            var.push(lat + sigma2);
        }
        Ok(PredictiveDensity {
            mean,
            var,
            latent_var,
        })
    }

    /// Predictive means plus the full latent covariance
    /// `K(X',X') - K(X',X) C^-1 K(X,X')` over the test inputs. Per-point
    /// scoring only needs the marginals from [`TrainedModel::predict`], so
    /// the `M x M` matrix is built only through this call.
    pub fn predict_with_covariance(&self, xhat: &Matrix) -> Result<(Vec<f64>, Matrix)> {
        if xhat.cols() != self.train_features.cols() {
            return Err(Error::Shape(format!(
                "test inputs have dimension {}, model was trained on {}",
                xhat.cols(),
                self.train_features.cols()
            )));
        }
        let k_cross = kernel_matrix(xhat, &self.train_features, &self.hp)?;
        let mean = k_cross.matvec(&self.alpha);
        let mut cov = kernel_matrix(xhat, xhat, &self.hp)?;
        // V = L^-1 K(X, X'); subtract V^T V.
        let m = xhat.rows();
        let mut solved = Vec::with_capacity(m);
        for i in 0..m {
            solved.push(self.chol.forward(k_cross.row(i)));
        }
        for i in 0..m {
            for j in 0..m {
                cov[(i, j)] -= dot(&solved[i], &solved[j]);
            }
        }
        Ok((mean, cov))
    }
}

/// Scalar score per test point: the predictive mean (equal to the mode and
/// median of the Gaussian predictive density).
pub fn point_scores(pd: &PredictiveDensity) -> Vec<f64> {
    pd.mean.clone()
}
