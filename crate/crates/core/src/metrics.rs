//! Evaluation of predictive densities against multi-rater references:
//! score rounding, PCC, MSE, the rater score histogram, the discretized
//! predictive posterior, and the discrete KL divergence between them.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gauss::std_normal_cdf;
use crate::gp::PredictiveDensity;

/// Floor applied to discretized predictive bins before renormalization, so
/// KL terms stay finite when a rater hits a bin the model puts no mass on.
pub const PROB_FLOOR: f64 = 1e-12;

/// Normalized probability vector over the integer scores
/// `score_min ..= score_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    pub score_min: i32,
    pub score_max: i32,
    pub probs: Vec<f64>,
}

impl DiscreteDistribution {
    fn new(score_min: i32, score_max: i32, probs: Vec<f64>) -> Result<Self> {
        let width = (score_max - score_min + 1) as usize;
        if score_min >= score_max {
            return Err(Error::Invalid(format!(
                "score range [{score_min}, {score_max}] is empty"
            )));
        }
        if probs.len() != width {
            return Err(Error::Invalid(format!(
                "{} probabilities for {} scores",
                probs.len(),
                width
            )));
        }
        Ok(DiscreteDistribution {
            score_min,
            score_max,
            probs,
        })
    }

    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    /// Probability of integer score `c` (zero outside the range).
    pub fn prob(&self, c: i32) -> f64 {
        if c < self.score_min || c > self.score_max {
            0.0
        } else {
            self.probs[(c - self.score_min) as usize]
        }
    }
}

/// Nearest integer with half-away-from-zero ties, clamped into the range.
pub fn round_and_clamp(y: f64, range: (i32, i32)) -> i32 {
    let r = y.round();
    let r = r.clamp(range.0 as f64, range.1 as f64);
    r as i32
}

/// Sample Pearson correlation. Errors when either input is constant, since
/// the correlation is undefined there.
pub fn pcc(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "pcc inputs have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Invalid("pcc needs at least two items".into()));
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b.iter()) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::Invalid(
            "pcc undefined: at least one input is constant".into(),
        ));
    }
    Ok(cov / (var_a.sqrt() * var_b.sqrt()))
}

/// Mean squared difference.
pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "mse inputs have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Invalid("mse needs at least one item".into()));
    }
    Ok(a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64)
}

/// Histogram of one row of rater scores: the fraction of raters who assigned
/// each integer score.
pub fn reference_distribution(
    ratings_row: &[f64],
    range: (i32, i32),
) -> Result<DiscreteDistribution> {
    if ratings_row.is_empty() {
        return Err(Error::Invalid(
            "reference distribution of no ratings".into(),
        ));
    }
    let width = (range.1 - range.0 + 1) as usize;
    let mut counts = vec![0usize; width];
    for &y in ratings_row {
        let c = y.round();
        if c < range.0 as f64 || c > range.1 as f64 {
            return Err(Error::Invalid(format!(
                "rating {y} outside score range [{}, {}]",
                range.0, range.1
            )));
        }
        counts[(c as i32 - range.0) as usize] += 1;
    }
    let r = ratings_row.len() as f64;
    let probs = counts.iter().map(|&c| c as f64 / r).collect();
    DiscreteDistribution::new(range.0, range.1, probs)
}

/// Unnormalized mass of each integer bin `[c - 0.5, c + 0.5]` under
/// `N(mean, var)`.
fn raw_bin_masses(mean: f64, var: f64, range: (i32, i32)) -> Vec<f64> {
    let sd = var.sqrt();
    (range.0..=range.1)
        .map(|c| {
            let hi = std_normal_cdf((c as f64 + 0.5 - mean) / sd);
            let lo = std_normal_cdf((c as f64 - 0.5 - mean) / sd);
            hi - lo
        })
        .collect()
}

/// Integrates the Gaussian predictive density over unit bins centered on
/// each integer score and renormalizes over the score range. Bins are
/// floored at `PROB_FLOOR` first so the result never carries exact zeros.
pub fn discretize_predictive(
    mean: f64,
    var: f64,
    range: (i32, i32),
) -> Result<DiscreteDistribution> {
    if var <= 0.0 || var.is_nan() {
        return Err(Error::Invalid(format!(
            "discretization needs positive variance, got {var}"
        )));
    }
    let mut probs = raw_bin_masses(mean, var, range);
    for p in &mut probs {
        *p = p.max(PROB_FLOOR);
    }
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    DiscreteDistribution::new(range.0, range.1, probs)
}

/// Discrete KL divergence `sum_c ref(c) log(ref(c) / hyp(c))`, natural log.
/// Terms with `ref(c) = 0` contribute zero.
pub fn kl_divergence(reference: &DiscreteDistribution, hyp: &DiscreteDistribution) -> Result<f64> {
    if reference.score_min != hyp.score_min || reference.score_max != hyp.score_max {
        return Err(Error::Shape(format!(
            "KL ranges disagree: [{}, {}] vs [{}, {}]",
            reference.score_min, reference.score_max, hyp.score_min, hyp.score_max
        )));
    }
    let mut kl = 0.0;
    for (p, q) in reference.probs.iter().zip(hyp.probs.iter()) {
        if *p > 0.0 {
            kl += p * (p / q).ln();
        }
    }
    Ok(kl)
}

/// Aggregate evaluation of one prediction set: PCC and MSE over rounded
/// scores, mean discrete KL, and the per-item loss vectors the significance
/// tests consume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pcc: f64,
    pub mse: f64,
    pub kl: f64,
    pub per_item_sq_err: Vec<f64>,
    pub per_item_kl: Vec<f64>,
}

/// Evaluates a predictive density against the ratings of a test set.
///
/// PCC and MSE compare the rounded predictive means against the rounded
/// per-item mean rater scores; KL compares each item's rater histogram
/// against the discretized predictive density.
pub fn evaluate(pd: &PredictiveDensity, test: &Dataset) -> Result<EvalReport> {
    if pd.len() != test.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} test items",
            pd.len(),
            test.len()
        )));
    }
    let range = test.score_range();
    let mut hyp_scores = Vec::with_capacity(test.len());
    let mut ref_scores = Vec::with_capacity(test.len());
    let mut per_item_sq_err = Vec::with_capacity(test.len());
    let mut per_item_kl = Vec::with_capacity(test.len());
    for i in 0..test.len() {
        let row = &test.ratings()[i];
        let ref_mean = row.iter().sum::<f64>() / row.len() as f64;
        let r = round_and_clamp(ref_mean, range) as f64;
        let h = round_and_clamp(pd.mean[i], range) as f64;
        ref_scores.push(r);
        hyp_scores.push(h);
        per_item_sq_err.push((h - r) * (h - r));

        let reference = reference_distribution(row, range)?;
        let predicted = discretize_predictive(pd.mean[i], pd.var[i], range)?;
        per_item_kl.push(kl_divergence(&reference, &predicted)?);
    }
    let pcc = pcc(&hyp_scores, &ref_scores)?;
    let mse = per_item_sq_err.iter().sum::<f64>() / per_item_sq_err.len() as f64;
    let kl = per_item_kl.iter().sum::<f64>() / per_item_kl.len() as f64;
    Ok(EvalReport {
        pcc,
        mse,
        kl,
        per_item_sq_err,
        per_item_kl,
    })
}
