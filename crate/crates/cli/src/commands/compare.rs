use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use gpscore::io::{read_json, write_json_pretty};
use gpscore::stats::{paired_t_test, steiger_z1};
use gpscore::{Error, Result, TestResult};

use super::evaluate::{load_aligned_predictions, StoredEvalReport};
use crate::report::{elapsed_s, file_checksum, Report, ARTIFACT_VERSION};

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    /// Evaluation report of system A.
    #[arg(long)]
    pub report_a: PathBuf,
    /// Evaluation report of system B.
    #[arg(long)]
    pub report_b: PathBuf,
    /// Predictions of system A (JSON lines).
    #[arg(long)]
    pub pred_a: PathBuf,
    /// Predictions of system B (JSON lines).
    #[arg(long)]
    pub pred_b: PathBuf,
    /// The shared test dataset.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Score range for CSV datasets.
    #[arg(long, default_value_t = 0)]
    pub score_min: i32,
    #[arg(long, default_value_t = 10)]
    pub score_max: i32,
}

#[derive(Serialize)]
struct ComparePayload {
    items: usize,
    pcc_a: f64,
    pcc_b: f64,
    mse_a: f64,
    mse_b: f64,
    kl_a: f64,
    kl_b: f64,
    /// Correlation between the two systems' rounded scores.
    r12: f64,
    /// Paired t-test on per-item squared errors (A vs B).
    t_mse: TestResult,
    /// Paired t-test on per-item KL divergences (A vs B).
    t_kl: TestResult,
    /// Steiger Z1* on the two PCCs against the shared reference.
    z1_pcc: TestResult,
}

pub fn run(args: &CompareArgs) -> Result<()> {
    let start = Instant::now();
    let checksums = vec![
        file_checksum("report_a", &args.report_a)?,
        file_checksum("report_b", &args.report_b)?,
        file_checksum("pred_a", &args.pred_a)?,
        file_checksum("pred_b", &args.pred_b)?,
        file_checksum("data", &args.data)?,
    ];
    let report_a: StoredEvalReport = read_json(&args.report_a)?;
    let report_b: StoredEvalReport = read_json(&args.report_b)?;
    let ds = super::load_dataset(&args.data, args.score_min, args.score_max)?;
    let (_, scores_a) = load_aligned_predictions(&args.pred_a, &ds)?;
    let (_, scores_b) = load_aligned_predictions(&args.pred_b, &ds)?;

    let m = ds.len();
    for (name, v) in [
        ("report_a.per_item_sq_err", report_a.per_item_sq_err.len()),
        ("report_a.per_item_kl", report_a.per_item_kl.len()),
        ("report_b.per_item_sq_err", report_b.per_item_sq_err.len()),
        ("report_b.per_item_kl", report_b.per_item_kl.len()),
    ] {
        if v != m {
            return Err(Error::Invalid(format!(
                "{name} has {v} items, dataset has {m}"
            )));
        }
    }

    let t_mse = paired_t_test(&report_a.per_item_sq_err, &report_b.per_item_sq_err)?;
    let t_kl = paired_t_test(&report_a.per_item_kl, &report_b.per_item_kl)?;

    let a_f: Vec<f64> = scores_a.iter().map(|&s| s as f64).collect();
    let b_f: Vec<f64> = scores_b.iter().map(|&s| s as f64).collect();
    let (r12, z1_pcc) = if scores_a == scores_b {
        // Identical rounded predictions: the PCC comparison is vacuous.
        (
            1.0,
            TestResult {
                statistic: 0.0,
                p_value: 1.0,
                n: m,
                degenerate: true,
            },
        )
    } else {
        let r12 = gpscore::metrics::pcc(&a_f, &b_f)?;
        // Guard against |r12| = 1 from affinely related but unequal scores.
        let r12_clamped = r12.clamp(-(1.0 - 1e-12), 1.0 - 1e-12);
        (r12, steiger_z1(report_a.pcc, report_b.pcc, r12_clamped, m)?)
    };

    let payload = ComparePayload {
        items: m,
        pcc_a: report_a.pcc,
        pcc_b: report_b.pcc,
        mse_a: report_a.mse,
        mse_b: report_b.mse,
        kl_a: report_a.kl,
        kl_b: report_b.kl,
        r12,
        t_mse,
        t_kl,
        z1_pcc,
    };

    println!(
        "t_mse: t={:.4} p={:.6}",
        payload.t_mse.statistic, payload.t_mse.p_value
    );
    println!(
        "t_kl: t={:.4} p={:.6}",
        payload.t_kl.statistic, payload.t_kl.p_value
    );
    println!(
        "z1_pcc: Z={:.4} p={:.6} (pcc_a={:.4}, pcc_b={:.4}, r12={:.4})",
        payload.z1_pcc.statistic, payload.z1_pcc.p_value, payload.pcc_a, payload.pcc_b, payload.r12
    );

    let report = Report {
        artifact_version: ARTIFACT_VERSION,
        command: "compare",
        config: args.clone(),
        inputs: checksums,
        payload,
        timing: elapsed_s(start),
    };
    write_json_pretty(&args.out, &report)?;
    Ok(())
}
