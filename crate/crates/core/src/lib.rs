//! Gaussian process regression for data scored by multiple raters.
//!
//! The training set pairs each input with several output samples (one per
//! rater). Three model variants are provided:
//!
//! * [`gp::Variant::Base`] — a standard GP trained on the per-input mean score,
//! * [`gp::Variant::Repeat`] — the naive construction that repeats every input
//!   once per rating, costing `O((NR)^3)`,
//! * [`gp::Variant::Joint`] — a reformulation of the repeated model through the
//!   per-input rating mean and biased standard deviation, which gives exactly
//!   the same marginal likelihood and predictions at `O(N^3)`.
//!
//! The crate also carries the evaluation machinery for such models: discrete
//! calibration against rater histograms (KL divergence), PCC/MSE on rounded
//! scores, paired t and Steiger Z1* significance tests, PCA whitening, and a
//! seeded synthetic data generator.

pub mod chol;
pub mod dataset;
pub mod error;
pub mod gauss;
pub mod gp;
pub mod io;
pub mod kernel;
pub mod matrix;
pub mod metrics;
pub mod optimize;
pub mod stats;
pub mod synth;
pub mod whiten;

pub use chol::{base_jitter, cholesky, CholeskyFactor};
pub use dataset::{summarize_ratings, Dataset, RatingSummary};
pub use error::{Error, Result};
pub use gp::{
    fit, loglik_base, loglik_joint, loglik_repeat, point_scores, PredictiveDensity, TrainedModel,
    Variant,
};
pub use kernel::{kernel_eval, kernel_matrix, Hyperparameters};
pub use matrix::Matrix;
pub use metrics::{DiscreteDistribution, EvalReport};
pub use optimize::{maximize, FitReport, OptimizerConfig};
pub use stats::TestResult;
pub use synth::{generate_synthetic, SyntheticData, SyntheticSpec};
pub use whiten::{apply_whitening, fit_whitening, WhiteningTransform};
