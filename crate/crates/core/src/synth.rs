//! Seeded synthetic multi-rater datasets: a latent function drawn from the
//! GP prior, plus independent per-rater observation noise.
//!
//! The pseudo-random stream is pinned to `ChaCha12Rng` seeded from
//! [`SyntheticSpec::seed`]; draws happen in a fixed order (inputs row-major, then the latent
//! vector, then ratings row-major), so fixtures reproduce across runs and
//! platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::chol::{base_jitter, cholesky};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{kernel_matrix, Hyperparameters};
use crate::matrix::Matrix;

/// Recipe for one synthetic train/test pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_train: usize,
    pub n_test: usize,
    pub dim: usize,
    pub true_hp: Hyperparameters,
    /// Ratings per input.
    pub raters: usize,
    pub score_min: i32,
    pub score_max: i32,
    pub seed: u64,
    /// When set, ratings are affinely mapped into the score range, rounded
    /// to integers and clamped, exercising the same discretization path as
    /// real score data. When clear, raw `latent + noise` values are emitted
    /// (the noise keeps exactly the configured sigma) and the score range is
    /// widened to cover them.
    pub round_scores: bool,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_train: 300,
            n_test: 100,
            dim: 2,
            true_hp: Hyperparameters::from_linear(2.0, 1.0, 0.8).expect("default hp"),
            raters: 5,
            score_min: 0,
            score_max: 10,
            seed: 0,
            round_scores: true,
        }
    }
}

/// Generated data plus the latent truth for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub train: Dataset,
    pub test: Dataset,
    pub latent_train: Vec<f64>,
    pub latent_test: Vec<f64>,
    /// Offset of the affine score mapping (0 when `round_scores` is off).
    pub map_offset: f64,
    /// Scale of the affine score mapping (1 when `round_scores` is off).
    pub map_scale: f64,
}

/// Draws a dataset pair from the generative model: inputs uniform in
/// `[-2, 2]^dim`, one latent function from the GP prior over the union of
/// train and test inputs, and `raters` independent noisy ratings per input.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    if spec.n_train == 0 || spec.n_test == 0 || spec.dim == 0 || spec.raters == 0 {
        return Err(Error::Invalid(
            "synthetic spec needs positive counts and dimension".into(),
        ));
    }
    if spec.score_min >= spec.score_max {
        return Err(Error::Invalid(format!(
            "score range [{}, {}] is empty",
            spec.score_min, spec.score_max
        )));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let total = spec.n_train + spec.n_test;

    let mut inputs = Matrix::zeros(total, spec.dim);
    for i in 0..total {
        for j in 0..spec.dim {
            inputs[(i, j)] = rng.random_range(-2.0..2.0);
        }
    }

    // Latent draw f = L z from the prior over the union of inputs. The
    // noiseless kernel is often numerically singular, so this is the one
    // place that starts from the base jitter instead of zero.
    let k = kernel_matrix(&inputs, &inputs, &spec.true_hp)?;
    let factor = cholesky(&k, base_jitter(&k))?;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let z: Vec<f64> = (0..total).map(|_| std_normal.sample(&mut rng)).collect();
    let mut latent = vec![0.0; total];
    for (i, li) in latent.iter_mut().enumerate() {
        let row = factor.lower().row(i);
        *li = row[..=i]
            .iter()
            .zip(z[..=i].iter())
            .map(|(l, z)| l * z)
            .sum();
    }

    let sigma = spec.true_hp.sigma();
    let mut raw_ratings: Vec<Vec<f64>> = Vec::with_capacity(total);
    for &f in &latent {
        let row: Vec<f64> = (0..spec.raters)
            .map(|_| f + sigma * std_normal.sample(&mut rng))
            .collect();
        raw_ratings.push(row);
    }

    let (score_min, score_max, map_offset, map_scale, ratings) = if spec.round_scores {
        // Map +/- 2.5 total standard deviations onto the score range.
        let s = spec.true_hp.s();
        let total_sd = (s * s + sigma * sigma).sqrt();
        let mid = 0.5 * (spec.score_min + spec.score_max) as f64;
        let half = 0.5 * (spec.score_max - spec.score_min) as f64;
        let scale = half / (2.5 * total_sd);
        let mapped: Vec<Vec<f64>> = raw_ratings
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&y| {
                        let v = (mid + y * scale).round();
                        v.clamp(spec.score_min as f64, spec.score_max as f64)
                    })
                    .collect()
            })
            .collect();
        (spec.score_min, spec.score_max, mid, scale, mapped)
    } else {
        // Raw ratings are unbounded; widen the declared range to cover them.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &raw_ratings {
            for &y in row {
                lo = lo.min(y);
                hi = hi.max(y);
            }
        }
        let lo = (lo.floor() as i32).min(spec.score_min);
        let hi = (hi.ceil() as i32).max(spec.score_max);
        (lo, hi, 0.0, 1.0, raw_ratings)
    };

    let split_matrix = |from: usize, to: usize| -> Matrix {
        let mut m = Matrix::zeros(to - from, spec.dim);
        for i in from..to {
            for j in 0..spec.dim {
                m[(i - from, j)] = inputs[(i, j)];
            }
        }
        m
    };

    let train = Dataset::new(
        split_matrix(0, spec.n_train),
        ratings[..spec.n_train].to_vec(),
        score_min,
        score_max,
    )?;
    let test = Dataset::new(
        split_matrix(spec.n_train, total),
        ratings[spec.n_train..].to_vec(),
        score_min,
        score_max,
    )?;

    Ok(SyntheticData {
        train,
        test,
        latent_train: latent[..spec.n_train].to_vec(),
        latent_test: latent[spec.n_train..].to_vec(),
        map_offset,
        map_scale,
    })
}
