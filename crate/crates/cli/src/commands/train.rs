use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use gpscore::io::{save_model, write_json_pretty};
use gpscore::{
    apply_whitening, fit, fit_whitening, maximize, FitReport, OptimizerConfig, Result, Variant,
};

use crate::report::{elapsed_s, file_checksum, Report, ARTIFACT_VERSION};

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Training dataset (.json, or .csv with --score-min/--score-max).
    #[arg(long)]
    pub data: PathBuf,
    /// Marginal-likelihood formulation to optimize.
    #[arg(long, default_value = "joint")]
    pub variant: Variant,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Report path (defaults to the model path with a .report.json suffix).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step_init: f64,
    /// Allow repeat-variant training past the O(N^3 R^3) size guard.
    #[arg(long, default_value_t = false)]
    pub force_repeat: bool,
    /// Skip PCA whitening of the input features.
    #[arg(long, default_value_t = false)]
    pub no_whiten: bool,
    /// Eigenvalue cutoff (relative to the largest) below which whitening
    /// drops a direction.
    #[arg(long, default_value_t = 1e-8)]
    pub whiten_eps: f64,
    /// Score range for CSV datasets, which do not declare one.
    #[arg(long, default_value_t = 0)]
    pub score_min: i32,
    #[arg(long, default_value_t = 10)]
    pub score_max: i32,
}

#[derive(Serialize)]
struct TrainPayload {
    variant: Variant,
    whitened_dim: Option<usize>,
    fit: FitReport,
    final_scale: f64,
    final_length: f64,
    final_noise: f64,
    model_path: String,
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let start = Instant::now();
    let checksum = file_checksum("data", &args.data)?;
    let raw = super::load_dataset(&args.data, args.score_min, args.score_max)?;

    let (ds, whitening) = if args.no_whiten {
        (raw, None)
    } else {
        let transform = fit_whitening(raw.features(), args.whiten_eps)?;
        let whitened = apply_whitening(&transform, raw.features())?;
        (raw.with_features(whitened)?, Some(transform))
    };

    let cfg = OptimizerConfig {
        max_iters: args.max_iters,
        grad_tol: args.grad_tol,
        step_init: args.step_init,
        seed: args.seed,
        restarts: args.restarts,
        force_repeat: args.force_repeat,
    };
    let fit_report = maximize(&ds, args.variant, &cfg, None)?;
    let model = fit(&ds, args.variant, &fit_report.final_hp)?;
    save_model(&model, whitening.as_ref(), &args.out)?;

    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| args.out.with_extension("report.json"));
    let hp = fit_report.final_hp;
    let report = Report {
        artifact_version: ARTIFACT_VERSION,
        command: "train",
        config: args.clone(),
        inputs: vec![checksum],
        payload: TrainPayload {
            variant: args.variant,
            whitened_dim: whitening.as_ref().map(|w| w.out_dim()),
            fit: fit_report,
            final_scale: hp.s(),
            final_length: hp.l(),
            final_noise: hp.sigma(),
            model_path: args.out.display().to_string(),
        },
        timing: elapsed_s(start),
    };
    write_json_pretty(&report_path, &report)?;

    println!(
        "trained {} model: objective {:.6}, s={:.4} l={:.4} sigma={:.4}, {} iterations{} -> {}",
        args.variant,
        report.payload.fit.final_objective,
        hp.s(),
        hp.l(),
        hp.sigma(),
        report.payload.fit.iterations,
        if report.payload.fit.converged {
            " (converged)"
        } else {
            ""
        },
        args.out.display()
    );
    Ok(())
}
