//! Training/evaluation data: input features paired with one or more integer
//! rater scores per input, and the per-row rating summary the joint model is
//! parameterized by.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// N input feature vectors with an integer score range and, for each input,
/// at least one rater score. Rows may have differing rater counts.
///
/// Ratings are held as `f64` so the synthetic generator can emit unrounded
/// diagnostic scores; file loading enforces the declared range either way.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    ratings: Vec<Vec<f64>>,
    score_min: i32,
    score_max: i32,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        ratings: Vec<Vec<f64>>,
        score_min: i32,
        score_max: i32,
    ) -> Result<Self> {
        if features.rows() == 0 || features.cols() == 0 {
            return Err(Error::Invalid(
                "dataset needs at least one row and one feature dimension".into(),
            ));
        }
        if !features.is_finite() {
            return Err(Error::Invalid("dataset features must be finite".into()));
        }
        if ratings.len() != features.rows() {
            return Err(Error::Invalid(format!(
                "{} feature rows but {} rating rows",
                features.rows(),
                ratings.len()
            )));
        }
        if score_min >= score_max {
            return Err(Error::Invalid(format!(
                "score range [{score_min}, {score_max}] is empty"
            )));
        }
        for (i, row) in ratings.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::Invalid(format!("item {i}: no ratings")));
            }
            for &r in row {
                if !r.is_finite() || r < score_min as f64 || r > score_max as f64 {
                    return Err(Error::Invalid(format!(
                        "item {i}: rating {r} outside declared range [{score_min}, {score_max}]"
                    )));
                }
            }
        }
        Ok(Dataset {
            features,
            ratings,
            score_min,
            score_max,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn ratings(&self) -> &[Vec<f64>] {
        &self.ratings
    }

    pub fn score_min(&self) -> i32 {
        self.score_min
    }

    pub fn score_max(&self) -> i32 {
        self.score_max
    }

    pub fn score_range(&self) -> (i32, i32) {
        (self.score_min, self.score_max)
    }

    /// Total number of ratings across all rows.
    pub fn total_ratings(&self) -> usize {
        self.ratings.iter().map(Vec::len).sum()
    }

    /// Rater count if it is the same for every row.
    pub fn constant_rater_count(&self) -> Option<usize> {
        let r = self.ratings[0].len();
        if self.ratings.iter().all(|row| row.len() == r) {
            Some(r)
        } else {
            None
        }
    }

    /// Replaces the feature matrix (e.g. with its whitened image). Row count
    /// must be preserved.
    pub fn with_features(&self, features: Matrix) -> Result<Self> {
        Dataset::new(
            features,
            self.ratings.clone(),
            self.score_min,
            self.score_max,
        )
    }
}

/// Per-row empirical mean and biased standard deviation of the ratings,
/// plus the rater counts. Both statistics are invariant to the order of the
/// ratings within a row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingSummary {
    pub mu_bar: Vec<f64>,
    pub eta_bar: Vec<f64>,
    pub r_counts: Vec<usize>,
}

/// Computes the per-row rating mean and biased (divide by R) standard
/// deviation. Rows are guaranteed non-empty by the `Dataset` invariant.
///
/// Accumulation runs over a sorted copy of each row, so the statistics are
/// bit-identical under any permutation of the ratings, not just equal up to
/// round-off.
pub fn summarize_ratings(ds: &Dataset) -> RatingSummary {
    let mut mu_bar = Vec::with_capacity(ds.len());
    let mut eta_bar = Vec::with_capacity(ds.len());
    let mut r_counts = Vec::with_capacity(ds.len());
    let mut sorted = Vec::new();
    for row in ds.ratings() {
        sorted.clear();
        sorted.extend_from_slice(row);
        sorted.sort_by(|a, b| a.total_cmp(b));
        let r = sorted.len() as f64;
        let mu = sorted.iter().sum::<f64>() / r;
        let ss = sorted.iter().map(|y| (y - mu) * (y - mu)).sum::<f64>();
        mu_bar.push(mu);
        eta_bar.push((ss / r).sqrt());
        r_counts.push(sorted.len());
    }
    RatingSummary {
        mu_bar,
        eta_bar,
        r_counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds_with_rows(rows: Vec<Vec<f64>>) -> Dataset {
        let n = rows.len();
        let features = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        Dataset::new(features, rows, 0, 10).unwrap()
    }

    #[test]
    fn summary_hand_case() {
        let s = summarize_ratings(&ds_with_rows(vec![vec![2.0, 4.0, 6.0]]));
        assert_eq!(s.mu_bar[0], 4.0);
        assert!((s.eta_bar[0] - (8.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.r_counts[0], 3);
    }

    #[test]
    fn constant_row_has_zero_spread() {
        let s = summarize_ratings(&ds_with_rows(vec![vec![5.0, 5.0, 5.0]]));
        assert_eq!(s.mu_bar[0], 5.0);
        assert_eq!(s.eta_bar[0], 0.0);
    }

    #[test]
    fn permutation_invariance_integer_rows() {
        let a = summarize_ratings(&ds_with_rows(vec![vec![2.0, 4.0, 6.0]]));
        let b = summarize_ratings(&ds_with_rows(vec![vec![6.0, 2.0, 4.0]]));
        assert_eq!(a, b);
    }

    #[test]
    fn sum_of_squares_identity() {
        let rows = vec![vec![1.0, 7.0, 4.0, 4.0], vec![0.0, 10.0]];
        let ds = ds_with_rows(rows.clone());
        let s = summarize_ratings(&ds);
        for (i, row) in rows.iter().enumerate() {
            let lhs: f64 = row.iter().map(|y| y * y).sum();
            let r = row.len() as f64;
            let rhs = r * s.mu_bar[i] * s.mu_bar[i] + r * s.eta_bar[i] * s.eta_bar[i];
            assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn empty_row_rejected() {
        let features = Matrix::from_vec(1, 1, vec![0.0]).unwrap();
        assert!(Dataset::new(features, vec![vec![]], 0, 10).is_err());
    }

    #[test]
    fn out_of_range_rating_rejected() {
        let features = Matrix::from_vec(1, 1, vec![0.0]).unwrap();
        let err = Dataset::new(features, vec![vec![11.0]], 0, 10).unwrap_err();
        assert!(err.to_string().contains("item 0"));
    }
}
