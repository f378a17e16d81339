use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use gpscore::io::{load_model, save_predictions, PredictionRecord};
use gpscore::metrics::{discretize_predictive, round_and_clamp};
use gpscore::{apply_whitening, Result};

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset whose features to predict on (.json or .csv).
    #[arg(long)]
    pub data: PathBuf,
    /// Output predictions, one JSON record per line.
    #[arg(long)]
    pub out: PathBuf,
    /// Score range for CSV datasets.
    #[arg(long, default_value_t = 0)]
    pub score_min: i32,
    #[arg(long, default_value_t = 10)]
    pub score_max: i32,
}

pub fn run(args: &PredictArgs) -> Result<()> {
    let start = Instant::now();
    let saved = load_model(&args.model)?;
    let ds = super::load_dataset(&args.data, args.score_min, args.score_max)?;

    let features = match &saved.whitening {
        Some(t) => apply_whitening(t, ds.features())?,
        None => ds.features().clone(),
    };
    let pd = saved.model.predict(&features)?;

    let range = ds.score_range();
    let records: Vec<PredictionRecord> = (0..pd.len())
        .map(|i| -> Result<PredictionRecord> {
            Ok(PredictionRecord {
                index: i,
                mean: pd.mean[i],
                var: pd.var[i],
                latent_var: pd.latent_var[i],
                score: round_and_clamp(pd.mean[i], range),
                dist: discretize_predictive(pd.mean[i], pd.var[i], range)?,
            })
        })
        .collect::<Result<_>>()?;
    save_predictions(&records, &args.out)?;

    println!(
        "wrote {} predictions to {} in {:.2}s",
        records.len(),
        args.out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
