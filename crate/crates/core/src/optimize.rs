//! Gradient-based maximization of the marginal log-likelihood objectives
//! over log-domain hyperparameters.
//!
//! The optimizer is plain gradient ascent with Armijo backtracking, plus a
//! few random restarts that jitter the heuristic initialization by
//! `exp(U(-1, 1))` per parameter. Accepted steps always improve the
//! objective, so the reported trace is nondecreasing. Convergence is
//! declared on the gradient infinity norm, which the finite-difference
//! suite can check directly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::chol::cholesky;
use crate::dataset::{summarize_ratings, Dataset, RatingSummary};
use crate::error::{Error, Result};
use crate::gauss::gaussian_logpdf;
use crate::gp::{effective_gp, log_g, log_g_grad_log_sigma, Variant};
use crate::kernel::{kernel_and_sqdist, Hyperparameters};
use crate::matrix::Matrix;

/// Largest `sum(R_i)` for which repeat-variant training runs without an
/// explicit override; the naive kernel costs `O((NR)^3)`.
pub const REPEAT_GUARD_LIMIT: usize = 4000;

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const MAX_STEP: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Convergence threshold on the gradient infinity norm.
    pub grad_tol: f64,
    /// Initial line-search step in log-parameter units.
    pub step_init: f64,
    pub seed: u64,
    /// Total optimization runs; the first starts from the provided (or
    /// heuristic) initialization, the rest from jittered copies.
    pub restarts: usize,
    /// Allows repeat-variant training past [`REPEAT_GUARD_LIMIT`].
    pub force_repeat: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iters: 500,
            grad_tol: 1e-6,
            step_init: 0.1,
            seed: 0,
            restarts: 3,
            force_repeat: false,
        }
    }
}

/// Outcome of [`maximize`]: the best restart's trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub final_hp: Hyperparameters,
    pub final_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after the initial evaluation and each accepted step.
    pub objective_trace: Vec<f64>,
    /// Number of evaluations whose factorization needed escalated jitter.
    pub jitter_events: usize,
}

/// Precomputed pieces of one variant's objective. Targets and features do
/// not depend on the hyperparameters; only the noise diagonal does.
struct Objective {
    variant: Variant,
    summary: RatingSummary,
    features: Matrix,
    targets: Vec<f64>,
    /// Per-row multiplier `w_i` with noise variance `sigma^2 * w_i`.
    noise_weights: Vec<f64>,
}

struct Eval {
    value: f64,
    grad: [f64; 3],
    jitter_used: f64,
}

impl Objective {
    fn new(ds: &Dataset, variant: Variant) -> Self {
        // Build with a placeholder noise level; only the weights are kept.
        let unit = Hyperparameters::new(0.0, 0.0, 0.0).expect("unit hyperparameters");
        let eff = effective_gp(ds, variant, &unit);
        let noise_weights = eff.noise;
        Objective {
            variant,
            summary: summarize_ratings(ds),
            features: eff.features,
            targets: eff.targets,
            noise_weights,
        }
    }

    fn noise(&self, hp: &Hyperparameters) -> Vec<f64> {
        let sigma2 = hp.sigma() * hp.sigma();
        self.noise_weights.iter().map(|w| sigma2 * w).collect()
    }

    fn extra_value(&self, hp: &Hyperparameters) -> f64 {
        match self.variant {
            Variant::Joint => log_g(&self.summary, hp.sigma()),
            _ => 0.0,
        }
    }

    /// Objective value only (used during backtracking).
    fn value(&self, hp: &Hyperparameters) -> Result<(f64, f64)> {
        let mut c = crate::kernel::kernel_matrix(&self.features, &self.features, hp)?;
        c.add_to_diagonal(&self.noise(hp));
        let chol = cholesky(&c, 0.0)?;
        let v = gaussian_logpdf(&self.targets, &vec![0.0; self.targets.len()], &chol)?;
        Ok((v + self.extra_value(hp), chol.jitter_used()))
    }

    /// Objective and its exact gradient with respect to
    /// `(log_s, log_l, log_sigma)`.
    ///
    /// For the Gaussian term and a parameter `t`:
    /// `dF/dt = 0.5 a' (dC/dt) a - 0.5 tr(C^-1 dC/dt)` with `a = C^-1 y`, and
    /// `dC/dlog s = 2K`, `dC/dlog l = K .* D2 / l^2`,
    /// `dC/dlog sigma = 2 diag(noise)`.
    fn value_and_grad(&self, hp: &Hyperparameters) -> Result<Eval> {
        let n = self.targets.len();
        let (k, d2) = kernel_and_sqdist(&self.features, &self.features, hp)?;
        let noise = self.noise(hp);
        let mut c = k.clone();
        c.add_to_diagonal(&noise);
        let chol = cholesky(&c, 0.0)?;

        // Same code path as `value` so line-search comparisons stay exact.
        let value = gaussian_logpdf(&self.targets, &vec![0.0; n], &chol)? + self.extra_value(hp);

        let alpha = chol.solve_vec(&self.targets);
        let c_inv = chol.inverse();

        let l = hp.l();
        let inv_l2 = 1.0 / (l * l);
        let mut quad_k = 0.0;
        let mut tr_k = 0.0;
        let mut quad_kd = 0.0;
        let mut tr_kd = 0.0;
        for i in 0..n {
            let k_row = k.row(i);
            let inv_row = c_inv.row(i);
            let d2_row = d2.row(i);
            let a_i = alpha[i];
            for j in 0..n {
                let kij = k_row[j];
                let kd = kij * d2_row[j];
                quad_k += a_i * alpha[j] * kij;
                tr_k += inv_row[j] * kij;
                quad_kd += a_i * alpha[j] * kd;
                tr_kd += inv_row[j] * kd;
            }
        }
        let grad_s = quad_k - tr_k;
        let grad_l = 0.5 * (quad_kd - tr_kd) * inv_l2;
        let mut grad_sigma = (0..n)
            .map(|i| noise[i] * (alpha[i] * alpha[i] - c_inv[(i, i)]))
            .sum::<f64>();
        if self.variant == Variant::Joint {
            grad_sigma += log_g_grad_log_sigma(&self.summary, hp.sigma());
        }

        Ok(Eval {
            value,
            grad: [grad_s, grad_l, grad_sigma],
            jitter_used: chol.jitter_used(),
        })
    }
}

/// Objective and exact gradient of the chosen variant at `hp`.
pub fn objective_and_gradient(
    ds: &Dataset,
    variant: Variant,
    hp: &Hyperparameters,
) -> Result<(f64, [f64; 3])> {
    let eval = Objective::new(ds, variant).value_and_grad(hp)?;
    Ok((eval.value, eval.grad))
}

/// Heuristic starting point: `s` from the spread of the per-row mean scores,
/// `l` from the median pairwise input distance, `sigma` from the pooled
/// within-row rating spread (or a fraction of `s` with single ratings).
pub fn default_init(ds: &Dataset) -> Result<Hyperparameters> {
    if ds.len() < 2 {
        return Err(Error::Invalid(
            "default_init needs at least two data points".into(),
        ));
    }
    let summary = summarize_ratings(ds);
    let n = ds.len();

    let mean = summary.mu_bar.iter().sum::<f64>() / n as f64;
    let var = summary
        .mu_bar
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (n - 1) as f64;
    let s = var.sqrt().max(1e-3);

    // Median pairwise distance over at most 1000 evenly strided rows.
    let sample: Vec<usize> = if n <= 1000 {
        (0..n).collect()
    } else {
        (0..1000).map(|i| i * n / 1000).collect()
    };
    let mut dists = Vec::with_capacity(sample.len() * (sample.len() - 1) / 2);
    for (a, &i) in sample.iter().enumerate() {
        for &j in &sample[a + 1..] {
            let d2: f64 = ds
                .features()
                .row(i)
                .iter()
                .zip(ds.features().row(j))
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            dists.push(d2.sqrt());
        }
    }
    dists.sort_by(|a, b| a.total_cmp(b));
    let median = if dists.len() % 2 == 1 {
        dists[dists.len() / 2]
    } else {
        0.5 * (dists[dists.len() / 2 - 1] + dists[dists.len() / 2])
    };
    let l = median.max(1e-3);

    let total_ratings: usize = summary.r_counts.iter().sum();
    let pooled_ss: f64 = summary
        .r_counts
        .iter()
        .zip(summary.eta_bar.iter())
        .map(|(&r, &eta)| r as f64 * eta * eta)
        .sum();
    let pooled = if summary.r_counts.iter().any(|&r| r > 1) {
        (pooled_ss / total_ratings as f64).sqrt()
    } else {
        0.0
    };
    let sigma = (0.1 * s).max(pooled);

    Hyperparameters::from_linear(s, l, sigma)
}

/// Maximizes the variant's marginal log-likelihood. Deterministic for a
/// given `(cfg.seed, init)`; returns the best run over `cfg.restarts`
/// starts, with ties broken toward the earlier run.
pub fn maximize(
    ds: &Dataset,
    variant: Variant,
    cfg: &OptimizerConfig,
    init: Option<Hyperparameters>,
) -> Result<FitReport> {
    if cfg.max_iters == 0 {
        return Err(Error::Invalid("max_iters must be at least 1".into()));
    }
    if cfg.grad_tol <= 0.0 || cfg.grad_tol.is_nan() {
        return Err(Error::Invalid("grad_tol must be positive".into()));
    }
    if variant == Variant::Repeat && ds.total_ratings() > REPEAT_GUARD_LIMIT && !cfg.force_repeat {
        return Err(Error::Invalid(format!(
            "repeat-variant training with {} total ratings scales as O(N^3 R^3); \
             pass the force-repeat flag to run it anyway",
            ds.total_ratings()
        )));
    }

    let objective = Objective::new(ds, variant);
    let base_init = match init {
        Some(hp) => hp,
        None => default_init(ds)?,
    };

    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let runs = cfg.restarts.max(1);
    let mut best: Option<FitReport> = None;
    let mut last_err = None;
    for run in 0..runs {
        let start = if run == 0 {
            base_init
        } else {
            Hyperparameters::new(
                base_init.log_s + rng.random_range(-1.0..1.0),
                base_init.log_l + rng.random_range(-1.0..1.0),
                base_init.log_sigma + rng.random_range(-1.0..1.0),
            )?
        };
        match ascend(&objective, start, cfg) {
            Ok(report) => {
                let better = match &best {
                    Some(b) => report.final_objective > b.final_objective,
                    None => true,
                };
                if better {
                    best = Some(report);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Numeric("no optimizer runs".into())))
}

fn inf_norm(g: &[f64; 3]) -> f64 {
    g.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn ascend(
    objective: &Objective,
    start: Hyperparameters,
    cfg: &OptimizerConfig,
) -> Result<FitReport> {
    let first = objective.value_and_grad(&start)?;
    let mut jitter_events = usize::from(first.jitter_used > 0.0);
    let mut hp = start;
    let mut value = first.value;
    let mut grad = first.grad;
    let mut trace = vec![value];
    let mut step = cfg.step_init.max(1e-8);
    let mut iterations = 0;
    let mut converged = false;

    loop {
        let gnorm = inf_norm(&grad);
        if gnorm <= cfg.grad_tol {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iters {
            break;
        }

        let dir = [grad[0] / gnorm, grad[1] / gnorm, grad[2] / gnorm];
        let slope = grad[0] * dir[0] + grad[1] * dir[1] + grad[2] * dir[2];

        let mut accepted = None;
        let mut s = step;
        for _ in 0..MAX_BACKTRACKS {
            let cand = Hyperparameters::new(
                hp.log_s + s * dir[0],
                hp.log_l + s * dir[1],
                hp.log_sigma + s * dir[2],
            )?;
            // Factorization failures during the search are treated as
            // rejected steps.
            if let Ok((v, jitter)) = objective.value(&cand) {
                if jitter > 0.0 {
                    jitter_events += 1;
                }
                if v >= value + ARMIJO_C * s * slope {
                    accepted = Some((cand, s));
                    break;
                }
            }
            s *= 0.5;
            if s < 1e-14 {
                break;
            }
        }

        let Some((cand, s_used)) = accepted else {
            break;
        };
        let eval = objective.value_and_grad(&cand)?;
        if eval.jitter_used > 0.0 {
            jitter_events += 1;
        }
        hp = cand;
        value = eval.value;
        grad = eval.grad;
        trace.push(value);
        iterations += 1;
        step = (s_used * 2.0).min(MAX_STEP);
    }

    Ok(FitReport {
        final_hp: hp,
        final_objective: value,
        iterations,
        converged,
        objective_trace: trace,
        jitter_events,
    })
}
