//! On-disk layout of a simulation bundle: one CSV tensor and one JSON sidecar
//! per run, plus a manifest tying them to the config that produced them.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dcgrb::engine::{ExperimentConfig, ExperimentResult};
use dcgrb::rotations::CliffordSequence;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct Row {
    pub seq_id: usize,
    pub realization: usize,
    pub qubit: usize,
    pub shots: u64,
    pub survival: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema_version: u32,
    pub label: String,
    pub config: ExperimentConfig,
    pub sequences: Vec<CliffordSequence>,
    pub durations: Vec<f64>,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    pub seed: u64,
    pub cells: u64,
    pub tensor: String,
    pub sidecar: String,
    pub seconds: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub artifact_version: String,
    pub config_path: String,
    pub config_sha256: String,
    /// Seed given on the command line, overriding every run's own seed.
    pub seed_override: Option<u64>,
    pub workers: Option<usize>,
    pub runs: Vec<RunRecord>,
    pub total_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
}

/// Writes `<label>.csv` and `<label>.json` under `dir`.
pub fn write_run(dir: &Path, label: &str, result: &ExperimentResult) -> Result<(PathBuf, PathBuf)> {
    let tensor = dir.join(format!("{label}.csv"));
    let mut w = csv::Writer::from_path(&tensor).with_context(|| format!("creating {}", tensor.display()))?;
    let cfg = &result.config;
    for k in 0..cfg.sequences {
        for n in 0..cfg.realizations {
            for q in 0..cfg.register.qubits {
                w.serialize(Row { seq_id: k, realization: n, qubit: q, shots: cfg.shots, survival: result.observed(k, n, q) })?;
            }
        }
    }
    w.flush()?;
    let sidecar = dir.join(format!("{label}.json"));
    write_json(
        &sidecar,
        &Sidecar {
            schema_version: SCHEMA_VERSION,
            label: label.to_string(),
            config: cfg.clone(),
            sequences: result.sequences.clone(),
            durations: result.durations.clone(),
            elapsed_seconds: result.elapsed_seconds,
        },
    )?;
    Ok((tensor, sidecar))
}

/// Survival tensor of a run as `[qubit][k][n]`.
pub fn read_tensor(path: &Path, config: &ExperimentConfig) -> Result<Vec<Vec<Vec<f64>>>> {
    let (k, n, q) = (config.sequences, config.realizations, config.register.qubits);
    let mut out = vec![vec![vec![f64::NAN; n]; k]; q];
    let mut seen = 0usize;
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    for row in r.deserialize() {
        let row: Row = row?;
        if row.seq_id >= k || row.realization >= n || row.qubit >= q {
            return Err(CliError::Config(format!("{}: row outside the configured grid", path.display())).into());
        }
        out[row.qubit][row.seq_id][row.realization] = row.survival;
        seen += 1;
    }
    if seen != k * n * q {
        return Err(CliError::Config(format!("{}: expected {} rows, found {seen}", path.display(), k * n * q)).into());
    }
    Ok(out)
}

pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST))?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "bundle schema {} does not match this build ({SCHEMA_VERSION})",
            manifest.schema_version
        ))
        .into());
    }
    Ok(manifest)
}
