//! Report envelope shared by every subcommand: resolved configuration,
//! artifact version, and input checksums, so runs can be reproduced and
//! reports diffed. Timing lives under its own key (`timing`) because it is
//! the one part that legitimately differs between identical runs.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use gpscore::Result;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct InputChecksum {
    pub name: String,
    pub path: String,
    pub sha256: String,
}

/// SHA-256 of a file's bytes, hex encoded.
pub fn file_checksum(name: &str, path: &Path) -> Result<InputChecksum> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    Ok(InputChecksum {
        name: name.to_string(),
        path: path.display().to_string(),
        sha256: hex,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub wall_time_s: f64,
}

/// Wraps a command's payload with the common metadata.
#[derive(Debug, Clone, Serialize)]
pub struct Report<C: Serialize, P: Serialize> {
    pub artifact_version: &'static str,
    pub command: &'static str,
    pub config: C,
    pub inputs: Vec<InputChecksum>,
    #[serde(flatten)]
    pub payload: P,
    pub timing: Timing,
}

pub fn elapsed_s(start: Instant) -> Timing {
    Timing {
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}
