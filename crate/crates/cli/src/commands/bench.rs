use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use gpscore::io::write_json_pretty;
use gpscore::{
    fit, generate_synthetic, Error, Hyperparameters, Matrix, Result, SyntheticSpec, Variant,
};

use crate::report::{elapsed_s, Report, ARTIFACT_VERSION};

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated training sizes.
    #[arg(long, default_value = "50,100,200")]
    pub grid_n: String,
    /// Comma-separated rater counts.
    #[arg(long, default_value = "1,5")]
    pub grid_r: String,
    /// Timed repetitions per cell (at least 3).
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// Linear algebra threads; timing is only meaningful single-threaded.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Test points predicted per timed repetition.
    #[arg(long, default_value_t = 50)]
    pub test_block: usize,
    /// Report format: JSON, or tidy CSV with one row per timed repetition.
    #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
    pub format: String,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct MeanStd {
    mean: f64,
    std: f64,
}

fn mean_std(samples: &[f64]) -> MeanStd {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    MeanStd {
        mean,
        std: var.sqrt(),
    }
}

#[derive(Serialize)]
struct BenchCell {
    n: usize,
    r: usize,
    variant: Variant,
    repeats: usize,
    factor_time_s: MeanStd,
    predict_time_s: MeanStd,
    total_time_s: MeanStd,
}

#[derive(Serialize)]
struct RatioRow {
    n: usize,
    r: usize,
    repeat_over_joint: f64,
}

#[derive(Serialize)]
struct BenchPayload {
    threads: usize,
    hp_scale: f64,
    hp_length: f64,
    hp_noise: f64,
    cells: Vec<BenchCell>,
    ratios: Vec<RatioRow>,
}

struct CellSamples {
    factor: Vec<f64>,
    predict: Vec<f64>,
    total: Vec<f64>,
}

/// One timed repetition: full inference = factorization (fit) plus
/// prediction of the test block.
fn time_once(
    ds: &gpscore::Dataset,
    variant: Variant,
    hp: &Hyperparameters,
    test_block: &Matrix,
) -> Result<(f64, f64)> {
    let t0 = Instant::now();
    let model = fit(ds, variant, hp)?;
    let factor_s = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let pd = model.predict(test_block)?;
    let predict_s = t1.elapsed().as_secs_f64();
    // Keep the optimizer from eliding the computation.
    assert!(pd.mean.iter().all(|v| v.is_finite()));
    Ok((factor_s, predict_s))
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let start = Instant::now();
    if args.threads != 1 {
        return Err(Error::Invalid(format!(
            "timing is pinned to one thread; got --threads {}",
            args.threads
        )));
    }
    if args.repeats < 3 {
        return Err(Error::Invalid("bench needs at least 3 repeats".into()));
    }
    let grid_n = super::parse_grid(&args.grid_n)?;
    let grid_r = super::parse_grid(&args.grid_r)?;
    let hp = Hyperparameters::from_linear(1.5, 1.0, 0.5)?;

    let mut cells = Vec::new();
    let mut ratios = Vec::new();
    let mut csv_rows: Vec<(usize, usize, Variant, usize, f64, f64)> = Vec::new();
    for &n in &grid_n {
        for &r in &grid_r {
            let spec = SyntheticSpec {
                n_train: n,
                n_test: args.test_block,
                dim: 2,
                true_hp: hp,
                raters: r,
                score_min: 0,
                score_max: 10,
                seed: args.seed ^ ((n as u64) << 20 | r as u64),
                round_scores: true,
            };
            let data = generate_synthetic(&spec)?;
            let mut totals = std::collections::BTreeMap::new();
            for variant in [Variant::Base, Variant::Joint, Variant::Repeat] {
                let mut samples = CellSamples {
                    factor: Vec::with_capacity(args.repeats),
                    predict: Vec::with_capacity(args.repeats),
                    total: Vec::with_capacity(args.repeats),
                };
                for rep in 0..args.repeats {
                    let (f, p) = time_once(&data.train, variant, &hp, data.test.features())?;
                    samples.factor.push(f);
                    samples.predict.push(p);
                    samples.total.push(f + p);
                    csv_rows.push((n, r, variant, rep, f, p));
                }
                totals.insert(variant.to_string(), mean_std(&samples.total).mean);
                cells.push(BenchCell {
                    n,
                    r,
                    variant,
                    repeats: args.repeats,
                    factor_time_s: mean_std(&samples.factor),
                    predict_time_s: mean_std(&samples.predict),
                    total_time_s: mean_std(&samples.total),
                });
            }
            let ratio = totals["repeat"] / totals["joint"];
            println!(
                "n={n} r={r}: base {:.4}s joint {:.4}s repeat {:.4}s (repeat/joint = {ratio:.2})",
                totals["base"], totals["joint"], totals["repeat"]
            );
            ratios.push(RatioRow {
                n,
                r,
                repeat_over_joint: ratio,
            });
        }
    }

    match args.format.as_str() {
        "json" => {
            let report = Report {
                artifact_version: ARTIFACT_VERSION,
                command: "bench",
                config: args.clone(),
                inputs: vec![],
                payload: BenchPayload {
                    threads: args.threads,
                    hp_scale: hp.s(),
                    hp_length: hp.l(),
                    hp_noise: hp.sigma(),
                    cells,
                    ratios,
                },
                timing: elapsed_s(start),
            };
            write_json_pretty(&args.out, &report)?;
        }
        "csv" => {
            let mut w = csv::Writer::from_path(&args.out).map_err(Error::from)?;
            w.write_record([
                "n",
                "r",
                "variant",
                "repeat",
                "factor_s",
                "predict_s",
                "total_s",
            ])
            .map_err(Error::from)?;
            for (n, r, variant, rep, f, p) in csv_rows {
                w.write_record([
                    n.to_string(),
                    r.to_string(),
                    variant.to_string(),
                    rep.to_string(),
                    format!("{f}"),
                    format!("{p}"),
                    format!("{}", f + p),
                ])
                .map_err(Error::from)?;
            }
            w.flush()?;
        }
        other => return Err(Error::Invalid(format!("unknown format '{other}'"))),
    }
    Ok(())
}
