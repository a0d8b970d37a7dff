use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use levybox_cli::{execute, Overrides};

/// Fractional quantum mechanics in an infinite well: spectra, propagators,
/// operator checks, stable-kernel semigroups and moving-wall bands.
#[derive(Debug, Parser)]
#[command(name = "levybox", version)]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.config.as_deref(), cli.overrides) {
        Ok(manifest) => {
            for o in &manifest.outputs {
                println!("{} {}", o.sha256, o.file);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = serde_json::to_string(&e.record()).expect("error record serializes");
            eprintln!("{record}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
