//! Per-run manifest: config echo, timing, error budgets and output digests.
//! Timestamps live here and never in data files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::FileConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputRecord {
    /// File name relative to the output directory.
    pub file: String,
    pub table: String,
    pub rows: usize,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub toolkit: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// `ok`, or `checks-failed` when a verification missed its tolerance.
    pub status: &'static str,
    pub started_unix_ms: u128,
    pub duration_seconds: f64,
    pub config: FileConfig,
    /// Largest reported error budget per operation.
    pub error_budgets: BTreeMap<String, f64>,
    pub failed_checks: Vec<String>,
    pub warnings: Vec<String>,
    pub outputs: Vec<OutputRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(path, e))
    }
}
