//! File formats: datasets (JSON and CSV), trained models, whitening
//! transforms, and prediction records (JSON lines).
//!
//! Model files are versioned JSON holding the variant, log-domain
//! hyperparameters, the optional whitening transform, and the effective
//! training features/targets; the Cholesky factor is rebuilt on load, which
//! is deterministic, so a reloaded model predicts bit-identically.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gp::{TrainedModel, Variant};
use crate::kernel::Hyperparameters;
use crate::matrix::Matrix;
use crate::metrics::DiscreteDistribution;
use crate::whiten::WhiteningTransform;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    score_min: i32,
    score_max: i32,
    items: Vec<ItemRecord>,
}

#[derive(Serialize, Deserialize)]
struct ItemRecord {
    features: Vec<f64>,
    ratings: Vec<Value>,
}

fn rating_to_value(y: f64) -> Value {
    if y.fract() == 0.0 && y.abs() < 9e15 {
        Value::from(y as i64)
    } else {
        Value::from(y)
    }
}

fn value_to_rating(v: &Value, item: usize) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::Invalid(format!("item {item}: rating {v} is not a number")))
}

pub fn save_dataset_json(ds: &Dataset, path: &Path) -> Result<()> {
    let items = (0..ds.len())
        .map(|i| ItemRecord {
            features: ds.features().row(i).to_vec(),
            ratings: ds.ratings()[i]
                .iter()
                .copied()
                .map(rating_to_value)
                .collect(),
        })
        .collect();
    let file = DatasetFile {
        score_min: ds.score_min(),
        score_max: ds.score_max(),
        items,
    };
    write_json_pretty(path, &file)
}

pub fn load_dataset_json(path: &Path) -> Result<Dataset> {
    let file: DatasetFile = read_json(path)?;
    if file.items.is_empty() {
        return Err(Error::Invalid("dataset file has no items".into()));
    }
    let dim = file.items[0].features.len();
    let mut rows = Vec::with_capacity(file.items.len());
    let mut ratings = Vec::with_capacity(file.items.len());
    for (i, item) in file.items.iter().enumerate() {
        if item.features.len() != dim {
            return Err(Error::Invalid(format!(
                "item {i}: {} features, expected {dim}",
                item.features.len()
            )));
        }
        rows.push(item.features.clone());
        ratings.push(
            item.ratings
                .iter()
                .map(|v| value_to_rating(v, i))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Dataset::new(
        Matrix::from_rows(&rows)?,
        ratings,
        file.score_min,
        file.score_max,
    )
}

/// Saves as CSV with header `f0..f{D-1}, r0..r{R-1}`. Requires a constant
/// rater count; the CSV layout cannot express ragged rows.
pub fn save_dataset_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let r = ds
        .constant_rater_count()
        .ok_or_else(|| Error::Invalid("csv export needs a constant rater count per row".into()))?;
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = Vec::new();
    for j in 0..ds.dim() {
        header.push(format!("f{j}"));
    }
    for k in 0..r {
        header.push(format!("r{k}"));
    }
    writer.write_record(&header)?;
    for i in 0..ds.len() {
        let mut record = Vec::with_capacity(ds.dim() + r);
        for &v in ds.features().row(i) {
            record.push(format!("{v}"));
        }
        for &y in &ds.ratings()[i] {
            record.push(format!("{y}"));
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Loads the CSV layout written by [`save_dataset_csv`]. The format carries
/// no score range, so the caller supplies one.
pub fn load_dataset_csv(path: &Path, score_min: i32, score_max: i32) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    let dim = header.iter().take_while(|h| h.starts_with('f')).count();
    let raters = header.len() - dim;
    if dim == 0 || raters == 0 {
        return Err(Error::Invalid(
            "csv header must be f0..f{D-1}, r0..r{R-1}".into(),
        ));
    }
    for (j, name) in header.iter().enumerate() {
        let expected = if j < dim {
            format!("f{j}")
        } else {
            format!("r{}", j - dim)
        };
        if name != expected {
            return Err(Error::Invalid(format!(
                "csv column {j} is named '{name}', expected '{expected}'"
            )));
        }
    }
    let mut rows = Vec::new();
    let mut ratings = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Invalid(format!(
                "row {i}: {} fields, expected {}",
                record.len(),
                header.len()
            )));
        }
        let parse = |j: usize| -> Result<f64> {
            record[j].trim().parse::<f64>().map_err(|_| {
                Error::Invalid(format!(
                    "row {i}, column {}: '{}' is not a number",
                    &header[j], &record[j]
                ))
            })
        };
        rows.push((0..dim).map(parse).collect::<Result<Vec<f64>>>()?);
        ratings.push(
            (dim..header.len())
                .map(parse)
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    if rows.is_empty() {
        return Err(Error::Invalid("csv dataset has no rows".into()));
    }
    Dataset::new(Matrix::from_rows(&rows)?, ratings, score_min, score_max)
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    variant: Variant,
    hyperparameters: Hyperparameters,
    whitening: Option<WhiteningTransform>,
    train_features: Matrix,
    effective_targets: Vec<f64>,
    noise_scale: Vec<f64>,
    rater_counts: Vec<usize>,
}

/// A reloaded model plus the whitening transform it was trained behind.
pub struct SavedModel {
    pub model: TrainedModel,
    pub whitening: Option<WhiteningTransform>,
}

pub fn save_model(
    model: &TrainedModel,
    whitening: Option<&WhiteningTransform>,
    path: &Path,
) -> Result<()> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        variant: model.variant(),
        hyperparameters: *model.hp(),
        whitening: whitening.cloned(),
        train_features: model.train_features().clone(),
        effective_targets: model.effective_targets().to_vec(),
        noise_scale: model.noise_scale().to_vec(),
        rater_counts: model.rater_counts().to_vec(),
    };
    write_json_pretty(path, &file)
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    let file: ModelFile = read_json(path)?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Invalid(format!(
            "model format version {} unsupported (expected {MODEL_FORMAT_VERSION})",
            file.format_version
        )));
    }
    let model = TrainedModel::from_parts(
        file.variant,
        file.hyperparameters,
        file.train_features,
        file.effective_targets,
        file.noise_scale,
        file.rater_counts,
    )?;
    Ok(SavedModel {
        model,
        whitening: file.whitening,
    })
}

pub fn save_whitening(t: &WhiteningTransform, path: &Path) -> Result<()> {
    write_json_pretty(path, t)
}

pub fn load_whitening(path: &Path) -> Result<WhiteningTransform> {
    read_json(path)
}

/// One prediction line: Gaussian moments, the rounded score, and the
/// discretized distribution over the score range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub index: usize,
    pub mean: f64,
    pub var: f64,
    pub latent_var: f64,
    pub score: i32,
    pub dist: DiscreteDistribution,
}

pub fn save_predictions(records: &[PredictionRecord], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for rec in records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Invalid(format!("predictions line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let reader = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(reader)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{fit, Variant};
    use crate::synth::{generate_synthetic, SyntheticSpec};

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn minimal_json_roundtrip() {
        let dir = tmp();
        let path = dir.path().join("mini.json");
        std::fs::write(
            &path,
            r#"{"score_min":0,"score_max":10,"items":[{"features":[1.5,-2.0],"ratings":[7,8]}]}"#,
        )
        .unwrap();
        let ds = load_dataset_json(&path).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.ratings()[0], vec![7.0, 8.0]);

        let out = dir.path().join("copy.json");
        save_dataset_json(&ds, &out).unwrap();
        let back = load_dataset_json(&out).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn json_and_csv_loads_agree() {
        let spec = SyntheticSpec {
            n_train: 12,
            n_test: 4,
            seed: 5,
            ..Default::default()
        };
        let ds = generate_synthetic(&spec).unwrap().train;
        let dir = tmp();
        let json_path = dir.path().join("d.json");
        let csv_path = dir.path().join("d.csv");
        save_dataset_json(&ds, &json_path).unwrap();
        save_dataset_csv(&ds, &csv_path).unwrap();
        let from_json = load_dataset_json(&json_path).unwrap();
        let from_csv = load_dataset_csv(&csv_path, ds.score_min(), ds.score_max()).unwrap();
        assert_eq!(from_json, from_csv);
    }

    #[test]
    fn out_of_range_rating_names_row() {
        let dir = tmp();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{"score_min":0,"score_max":10,"items":[
                {"features":[0.0],"ratings":[5]},
                {"features":[1.0],"ratings":[11]}]}"#,
        )
        .unwrap();
        let err = load_dataset_json(&path).unwrap_err();
        assert!(err.to_string().contains("item 1"), "{err}");
    }

    #[test]
    fn ragged_rows_survive_json() {
        let ds = Dataset::new(
            Matrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap(),
            vec![vec![3.0], vec![4.0, 6.0, 5.0]],
            0,
            10,
        )
        .unwrap();
        let dir = tmp();
        let path = dir.path().join("ragged.json");
        save_dataset_json(&ds, &path).unwrap();
        assert_eq!(load_dataset_json(&path).unwrap(), ds);
        // CSV cannot express ragged rows.
        assert!(save_dataset_csv(&ds, &dir.path().join("ragged.csv")).is_err());
    }

    #[test]
    fn unrounded_ratings_roundtrip_exactly() {
        let spec = SyntheticSpec {
            n_train: 10,
            n_test: 3,
            round_scores: false,
            seed: 9,
            ..Default::default()
        };
        let ds = generate_synthetic(&spec).unwrap().train;
        let dir = tmp();
        let path = dir.path().join("raw.json");
        save_dataset_json(&ds, &path).unwrap();
        let back = load_dataset_json(&path).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn model_roundtrip_preserves_predictions() {
        let spec = SyntheticSpec {
            n_train: 20,
            n_test: 6,
            seed: 2,
            ..Default::default()
        };
        let data = generate_synthetic(&spec).unwrap();
        let hp = Hyperparameters::from_linear(1.5, 1.0, 0.6).unwrap();
        let model = fit(&data.train, Variant::Joint, &hp).unwrap();
        let before = model.predict(data.test.features()).unwrap();

        let dir = tmp();
        let path = dir.path().join("model.json");
        save_model(&model, None, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        let after = loaded.model.predict(data.test.features()).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn whitening_file_roundtrip_bit_identical() {
        let x = Matrix::from_vec(4, 2, vec![0.1, 0.2, 1.0, -0.3, 2.2, 0.7, -1.5, 0.9]).unwrap();
        let t = crate::whiten::fit_whitening(&x, 1e-8).unwrap();
        let dir = tmp();
        let path = dir.path().join("whiten.json");
        save_whitening(&t, &path).unwrap();
        let back = load_whitening(&path).unwrap();
        assert_eq!(t, back);
        // A second save produces identical bytes.
        let path2 = dir.path().join("whiten2.json");
        save_whitening(&back, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn predictions_jsonl_roundtrip() {
        let recs = vec![
            PredictionRecord {
                index: 0,
                mean: 4.3,
                var: 1.2,
                latent_var: 0.7,
                score: 4,
                dist: crate::metrics::discretize_predictive(4.3, 1.2, (0, 10)).unwrap(),
            },
            PredictionRecord {
                index: 1,
                mean: 8.9,
                var: 0.9,
                latent_var: 0.4,
                score: 9,
                dist: crate::metrics::discretize_predictive(8.9, 0.9, (0, 10)).unwrap(),
            },
        ];
        let dir = tmp();
        let path = dir.path().join("preds.jsonl");
        save_predictions(&recs, &path).unwrap();
        assert_eq!(load_predictions(&path).unwrap(), recs);
    }
}
