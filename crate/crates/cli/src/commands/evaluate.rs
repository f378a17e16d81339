use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::{Deserialize, Serialize};

use gpscore::io::{load_predictions, write_json_pretty};
use gpscore::metrics::evaluate;
use gpscore::{Dataset, Error, PredictiveDensity, Result};

use crate::report::{elapsed_s, file_checksum, Report, ARTIFACT_VERSION};

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    /// Predictions file written by `predict` (JSON lines).
    #[arg(long)]
    pub predictions: PathBuf,
    /// Dataset with the reference ratings (.json or .csv).
    #[arg(long)]
    pub data: PathBuf,
    /// Output report path.
    #[arg(long)]
    pub out: PathBuf,
    /// Report format: full JSON, or tidy per-item CSV for plotting.
    #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
    pub format: String,
    /// Score range for CSV datasets.
    #[arg(long, default_value_t = 0)]
    pub score_min: i32,
    #[arg(long, default_value_t = 10)]
    pub score_max: i32,
}

/// Payload of the JSON evaluation report; `compare` reads this back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalPayload {
    pub items: usize,
    pub pcc: f64,
    pub mse: f64,
    pub kl: f64,
    pub per_item_sq_err: Vec<f64>,
    pub per_item_kl: Vec<f64>,
}

/// The slice of an evaluation report that `compare` needs.
#[derive(Deserialize)]
pub struct StoredEvalReport {
    pub pcc: f64,
    pub mse: f64,
    pub kl: f64,
    pub per_item_sq_err: Vec<f64>,
    pub per_item_kl: Vec<f64>,
}

/// Loads predictions and checks they align with the dataset one to one.
pub fn load_aligned_predictions(
    path: &Path,
    ds: &Dataset,
) -> Result<(PredictiveDensity, Vec<i32>)> {
    let mut records = load_predictions(path)?;
    records.sort_by_key(|r| r.index);
    if records.len() != ds.len() {
        return Err(Error::Invalid(format!(
            "{} predictions for {} dataset items",
            records.len(),
            ds.len()
        )));
    }
    for (i, rec) in records.iter().enumerate() {
        if rec.index != i {
            return Err(Error::Invalid(format!(
                "prediction indices are not contiguous at {i} (found {})",
                rec.index
            )));
        }
    }
    let pd = PredictiveDensity {
        mean: records.iter().map(|r| r.mean).collect(),
        var: records.iter().map(|r| r.var).collect(),
        latent_var: records.iter().map(|r| r.latent_var).collect(),
    };
    let scores = records.iter().map(|r| r.score).collect();
    Ok((pd, scores))
}

pub fn run(args: &EvaluateArgs) -> Result<()> {
    let start = Instant::now();
    let checksums = vec![
        file_checksum("predictions", &args.predictions)?,
        file_checksum("data", &args.data)?,
    ];
    let ds = super::load_dataset(&args.data, args.score_min, args.score_max)?;
    let (pd, _) = load_aligned_predictions(&args.predictions, &ds)?;
    let rep = evaluate(&pd, &ds)?;

    // Flat key-value summary on stdout.
    println!("pcc={:.6}", rep.pcc);
    println!("mse={:.6}", rep.mse);
    println!("kl={:.6}", rep.kl);

    match args.format.as_str() {
        "json" => {
            let report = Report {
                artifact_version: ARTIFACT_VERSION,
                command: "evaluate",
                config: args.clone(),
                inputs: checksums,
                payload: EvalPayload {
                    items: ds.len(),
                    pcc: rep.pcc,
                    mse: rep.mse,
                    kl: rep.kl,
                    per_item_sq_err: rep.per_item_sq_err,
                    per_item_kl: rep.per_item_kl,
                },
                timing: elapsed_s(start),
            };
            write_json_pretty(&args.out, &report)?;
        }
        "csv" => {
            let mut w = csv::Writer::from_path(&args.out).map_err(gpscore::Error::from)?;
            w.write_record(["item", "mean", "var", "score", "ref_mean", "sq_err", "kl"])
                .map_err(gpscore::Error::from)?;
            for i in 0..ds.len() {
                let row = &ds.ratings()[i];
                let ref_mean = row.iter().sum::<f64>() / row.len() as f64;
                let score = gpscore::metrics::round_and_clamp(pd.mean[i], ds.score_range());
                w.write_record([
                    i.to_string(),
                    format!("{}", pd.mean[i]),
                    format!("{}", pd.var[i]),
                    score.to_string(),
                    format!("{ref_mean}"),
                    format!("{}", rep.per_item_sq_err[i]),
                    format!("{}", rep.per_item_kl[i]),
                ])
                .map_err(gpscore::Error::from)?;
            }
            w.flush()?;
        }
        other => return Err(Error::Invalid(format!("unknown format '{other}'"))),
    }

    Ok(())
}
