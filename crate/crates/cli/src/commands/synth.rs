use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use gpscore::io::{save_dataset_csv, save_dataset_json, write_json_pretty};
use gpscore::{generate_synthetic, Error, Hyperparameters, Result, SyntheticSpec};

use crate::report::ARTIFACT_VERSION;

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    /// Directory receiving train.*, test.* and truth.json.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 300)]
    pub n_train: usize,
    #[arg(long, default_value_t = 100)]
    pub n_test: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Ratings per input.
    #[arg(long, default_value_t = 5)]
    pub raters: usize,
    /// Kernel scale s of the generating process.
    #[arg(long, default_value_t = 2.0)]
    pub scale: f64,
    /// Kernel length l of the generating process.
    #[arg(long, default_value_t = 1.0)]
    pub length: f64,
    /// Observation noise sigma of the generating process.
    #[arg(long, default_value_t = 0.8)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub score_min: i32,
    #[arg(long, default_value_t = 10)]
    pub score_max: i32,
    /// Emit raw latent + noise ratings instead of mapped integer scores.
    #[arg(long, default_value_t = false)]
    pub unrounded: bool,
    /// Dataset file format.
    #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
    pub format: String,
}

/// Truth sidecar. Deliberately carries no timing so a rerun with the same
/// seed reproduces it byte for byte.
#[derive(Serialize)]
struct TruthFile {
    artifact_version: &'static str,
    command: &'static str,
    config: SynthArgs,
    generator: &'static str,
    true_hp: Hyperparameters,
    true_scale: f64,
    true_length: f64,
    true_noise: f64,
    map_offset: f64,
    map_scale: f64,
    latent_train: Vec<f64>,
    latent_test: Vec<f64>,
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let start = Instant::now();
    let spec = SyntheticSpec {
        n_train: args.n_train,
        n_test: args.n_test,
        dim: args.dim,
        true_hp: Hyperparameters::from_linear(args.scale, args.length, args.noise)?,
        raters: args.raters,
        score_min: args.score_min,
        score_max: args.score_max,
        seed: args.seed,
        round_scores: !args.unrounded,
    };
    let data = generate_synthetic(&spec)?;

    std::fs::create_dir_all(&args.out)?;
    let (train_path, test_path) = match args.format.as_str() {
        "csv" => {
            let train = args.out.join("train.csv");
            let test = args.out.join("test.csv");
            save_dataset_csv(&data.train, &train)?;
            save_dataset_csv(&data.test, &test)?;
            (train, test)
        }
        "json" => {
            let train = args.out.join("train.json");
            let test = args.out.join("test.json");
            save_dataset_json(&data.train, &train)?;
            save_dataset_json(&data.test, &test)?;
            (train, test)
        }
        other => return Err(Error::Invalid(format!("unknown format '{other}'"))),
    };

    let truth_path = args.out.join("truth.json");
    let truth = TruthFile {
        artifact_version: ARTIFACT_VERSION,
        command: "synth",
        config: args.clone(),
        generator: "chacha12",
        true_hp: spec.true_hp,
        true_scale: args.scale,
        true_length: args.length,
        true_noise: args.noise,
        map_offset: data.map_offset,
        map_scale: data.map_scale,
        latent_train: data.latent_train.clone(),
        latent_test: data.latent_test.clone(),
    };
    write_json_pretty(&truth_path, &truth)?;

    println!(
        "wrote {} ({} items), {} ({} items), {} in {:.2}s",
        train_path.display(),
        data.train.len(),
        test_path.display(),
        data.test.len(),
        truth_path.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
