//! Batch front end for `levybox`: a JSON config (plus flag overrides) is
//! validated in full, one command runs, and its tables and a manifest with
//! sha256 digests are written to the output directory.

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;
pub mod table;

use std::path::Path;

pub use config::{Command, FileConfig, Overrides, RunConfig};
pub use error::{CliError, CliResult};
pub use manifest::RunManifest;

/// Loads `config` (if any), applies the overrides, validates, and runs.
/// A manifest with status `checks-failed` comes back as [`CliError::ChecksFailed`]
/// after everything has been written.
pub fn execute(config: Option<&Path>, overrides: Overrides) -> CliResult<RunManifest> {
    let mut file = match config {
        Some(path) => config::read_config_file(path)?,
        None => FileConfig::default(),
    };
    overrides.apply(&mut file);
    let cfg = config::resolve(file)?;
    let manifest = run::run(&cfg)?;
    if let Some(first) = manifest.failed_checks.first() {
        return Err(CliError::ChecksFailed {
            operation: manifest.command.to_string(),
            failed: manifest.failed_checks.len(),
            first: first.clone(),
        });
    }
    Ok(manifest)
}
