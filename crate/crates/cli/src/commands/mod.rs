pub mod bench;
pub mod compare;
pub mod evaluate;
pub mod predict;
pub mod synth;
pub mod train;

use std::path::Path;

use gpscore::{Dataset, Error, Result};

/// Loads a dataset by file extension: `.csv` uses the flat layout (which
/// carries no score range, so one is supplied), anything else is JSON.
pub fn load_dataset(path: &Path, score_min: i32, score_max: i32) -> Result<Dataset> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => gpscore::io::load_dataset_csv(path, score_min, score_max),
        _ => gpscore::io::load_dataset_json(path),
    }
}

/// Parses a comma-separated list of positive integers (grid flags).
pub fn parse_grid(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let v: usize = part
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("'{part}' is not a positive integer")))?;
        if v == 0 {
            return Err(Error::Invalid("grid values must be positive".into()));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Invalid("empty grid".into()));
    }
    Ok(out)
}
