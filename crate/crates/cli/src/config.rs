//! JSON run configuration, command-line overrides and fail-closed validation.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use levybox::walls::MovingWallParams;
use levybox::{BoxParams, Grid, QuadratureSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Overrides the root that relative output directories resolve against.
pub const OUTPUT_ROOT_ENV: &str = "LEVYBOX_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Eigen,
    Evolve,
    Green,
    ApplyOp,
    VerifyAppendix,
    CkCheck,
    Dos,
    Walls,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Eigen,
        Command::Evolve,
        Command::Green,
        Command::ApplyOp,
        Command::VerifyAppendix,
        Command::CkCheck,
        Command::Dos,
        Command::Walls,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::Evolve => "evolve",
            Command::Green => "green",
            Command::ApplyOp => "apply-op",
            Command::VerifyAppendix => "verify-appendix",
            Command::CkCheck => "ck-check",
            Command::Dos => "dos",
            Command::Walls => "walls",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GreenMethod {
    #[default]
    Spectral,
    Images,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SectorChoice {
    #[default]
    Odd,
    Even,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub alpha: f64,
    pub d_alpha: f64,
    pub hbar: f64,
    pub half_width: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection {
            alpha: 1.5,
            d_alpha: 1.0,
            hbar: 1.0,
            half_width: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WallsSection {
    pub epsilon: f64,
    pub nu: f64,
}

impl Default for WallsSection {
    fn default() -> Self {
        WallsSection { epsilon: 0.01, nu: 1.0 }
    }
}

/// Unset fields take the box-scaled defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadSection {
    pub k_cutoff: Option<f64>,
    pub eta: Option<f64>,
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_subdivisions: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n_points: 1025 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSection {
    pub output_dir: PathBuf,
    pub format: Format,
}

impl Default for IoSection {
    fn default() -> Self {
        IoSection {
            output_dir: PathBuf::from("levybox-out"),
            format: Format::Csv,
        }
    }
}

/// Per-command knobs. Each command reads only its own fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Modes per parity (eigen, evolve, green spectral).
    pub m_max: u32,
    /// Windings per side (green images and closed form).
    pub l_max: u32,
    pub t: f64,
    /// Evolve output times.
    pub times: Vec<f64>,
    /// Green source points.
    pub x0: Vec<f64>,
    pub method: GreenMethod,
    pub sector: SectorChoice,
    /// Single regularization level; unset extrapolates images and leaves
    /// spectral sums undamped.
    pub eta: Option<f64>,
    pub packet_center: f64,
    pub packet_width: f64,
    pub packet_k0: f64,
    /// Odd mode fed to apply-op.
    pub mode: u32,
    pub appendix_m: Vec<u32>,
    pub appendix_alpha: Vec<f64>,
    pub appendix_eigen_m: Vec<u32>,
    pub appendix_tol: f64,
    pub ck_alpha: Vec<f64>,
    pub ck_t: f64,
    pub ck_points: usize,
    pub ck_half_width: f64,
    pub ck_tol: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub n_energies: usize,
    pub sigma: f64,
    pub band_m_max: u32,
    pub n_min: i32,
    pub n_max: i32,
    pub xi_samples: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            m_max: 200,
            l_max: 50,
            t: 0.5,
            times: vec![0.0, 0.5, 1.0],
            x0: vec![0.25],
            method: GreenMethod::Spectral,
            sector: SectorChoice::Odd,
            eta: None,
            packet_center: 0.2,
            packet_width: 0.1,
            packet_k0: 5.0,
            mode: 1,
            appendix_m: vec![1, 2, 3, 4, 5],
            appendix_alpha: vec![1.25, 1.5, 1.75],
            appendix_eigen_m: vec![1, 2, 3],
            appendix_tol: 1e-6,
            ck_alpha: vec![1.0, 1.5, 2.0],
            ck_t: 1.0,
            ck_points: 1 << 14,
            ck_half_width: 40.0,
            ck_tol: 1e-8,
            e_min: 0.0,
            e_max: 50.0,
            n_energies: 5001,
            sigma: 0.05,
            band_m_max: 3,
            n_min: -1,
            n_max: 1,
            xi_samples: 4096,
        }
    }
}

/// Configuration file layout. Every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<Command>,
    pub params: ParamsSection,
    pub walls: Option<WallsSection>,
    pub quad: QuadSection,
    pub grid: GridSection,
    pub io: IoSection,
    pub run: RunSection,
}

/// Command-line overrides, applied on top of the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long, value_enum)]
    pub command: Option<Command>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub d_alpha: Option<f64>,
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Setting either wall field adds a walls section.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub k_cutoff: Option<f64>,
    #[arg(long)]
    pub quad_eta: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub m_max: Option<u32>,
    #[arg(long)]
    pub l_max: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub times: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub method: Option<GreenMethod>,
    #[arg(long, value_enum)]
    pub sector: Option<SectorChoice>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub packet_center: Option<f64>,
    #[arg(long)]
    pub packet_width: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub packet_k0: Option<f64>,
    #[arg(long)]
    pub mode: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub e_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub e_max: Option<f64>,
    #[arg(long)]
    pub n_energies: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub band_m_max: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub n_min: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub n_max: Option<i32>,
    #[arg(long)]
    pub xi_samples: Option<usize>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Overrides {
    pub fn apply(self, cfg: &mut FileConfig) {
        if self.command.is_some() {
            cfg.command = self.command;
        }
        let p = &mut cfg.params;
        set(&mut p.alpha, self.alpha);
        set(&mut p.d_alpha, self.d_alpha);
        set(&mut p.hbar, self.hbar);
        set(&mut p.half_width, self.half_width);
        if self.epsilon.is_some() || self.nu.is_some() {
            let w = cfg.walls.get_or_insert_with(WallsSection::default);
            set(&mut w.epsilon, self.epsilon);
            set(&mut w.nu, self.nu);
        }
        let q = &mut cfg.quad;
        set(&mut q.k_cutoff, self.k_cutoff.map(Some));
        set(&mut q.eta, self.quad_eta.map(Some));
        set(&mut q.abs_tol, self.abs_tol.map(Some));
        set(&mut q.rel_tol, self.rel_tol.map(Some));
        set(&mut cfg.grid.n_points, self.n_points);
        set(&mut cfg.io.output_dir, self.output_dir);
        set(&mut cfg.io.format, self.format);
        let r = &mut cfg.run;
        set(&mut r.m_max, self.m_max);
        set(&mut r.l_max, self.l_max);
        set(&mut r.t, self.t);
        set(&mut r.times, self.times);
        set(&mut r.x0, self.x0);
        set(&mut r.method, self.method);
        set(&mut r.sector, self.sector);
        set(&mut r.eta, self.eta.map(Some));
        set(&mut r.packet_center, self.packet_center);
        set(&mut r.packet_width, self.packet_width);
        set(&mut r.packet_k0, self.packet_k0);
        set(&mut r.mode, self.mode);
        set(&mut r.e_min, self.e_min);
        set(&mut r.e_max, self.e_max);
        set(&mut r.n_energies, self.n_energies);
        set(&mut r.sigma, self.sigma);
        set(&mut r.band_m_max, self.band_m_max);
        set(&mut r.n_min, self.n_min);
        set(&mut r.n_max, self.n_max);
        set(&mut r.xi_samples, self.xi_samples);
    }
}

/// Fully validated configuration. `echo` is the resolved file form, with
/// every default filled in, as recorded in the manifest.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub params: BoxParams,
    pub walls: Option<MovingWallParams>,
    pub quad: QuadratureSpec,
    pub grid: Grid,
    pub output_dir: PathBuf,
    pub format: Format,
    pub run: RunSection,
    pub echo: FileConfig,
}

pub fn read_config_file(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> CliResult<FileConfig> {
    serde_json::from_str(text).map_err(|e| CliError::config("config", e.to_string()))
}

/// Maps a library validation error onto a dotted config path.
fn in_section(section: &str, e: levybox::Error) -> CliError {
    match e {
        levybox::Error::InvalidParameter { field, reason } => {
            let section = if field == "hbar" { "params" } else { section };
            CliError::config(format!("{section}.{field}"), reason)
        }
        other => CliError::config(section, other.to_string()),
    }
}

fn check(ok: bool, path: &str, reason: impl Into<String>) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(path, reason))
    }
}

fn finite_all(path: &str, values: &[f64]) -> CliResult<()> {
    check(values.iter().all(|v| v.is_finite()), path, "values must be finite")
}

fn resolve_output_dir(dir: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}

/// Validates every field before any computation runs.
pub fn resolve(mut cfg: FileConfig) -> CliResult<RunConfig> {
    let command = cfg.command.ok_or_else(|| CliError::config("command", "missing"))?;
    let walls_command = matches!(command, Command::Walls | Command::Dos);
    check(
        cfg.walls.is_none() || walls_command,
        "walls",
        "walls requires command=walls or dos",
    )?;
    check(
        cfg.walls.is_some() || command != Command::Walls,
        "walls",
        "command=walls needs a walls section",
    )?;

    let p = &cfg.params;
    let params = BoxParams::new(p.alpha, p.d_alpha, p.hbar, p.half_width).map_err(|e| in_section("params", e))?;

    let defaults = QuadratureSpec::for_box(&params);
    let q = &mut cfg.quad;
    let quad = QuadratureSpec {
        k_cutoff: *q.k_cutoff.get_or_insert(defaults.k_cutoff),
        eta: *q.eta.get_or_insert(defaults.eta),
        abs_tol: *q.abs_tol.get_or_insert(defaults.abs_tol),
        rel_tol: *q.rel_tol.get_or_insert(defaults.rel_tol),
        max_subdivisions: *q.max_subdivisions.get_or_insert(defaults.max_subdivisions),
    };
    quad.validate().map_err(|e| in_section("quad", e))?;

    let grid = Grid::for_box(cfg.grid.n_points, &params).map_err(|e| in_section("grid", e))?;

    let walls = match &cfg.walls {
        Some(w) => Some(MovingWallParams::new(w.epsilon, w.nu, params).map_err(|e| in_section("walls", e))?),
        None => None,
    };

    validate_run(command, &cfg.run, &params, &grid)?;

    Ok(RunConfig {
        command,
        params,
        walls,
        quad,
        grid,
        output_dir: resolve_output_dir(&cfg.io.output_dir),
        format: cfg.io.format,
        run: cfg.run.clone(),
        echo: cfg,
    })
}

/// Index of the grid node at `x`, if `x` is one.
pub fn node_index(grid: &Grid, x: f64) -> Option<usize> {
    let pos = (x + grid.half_width()) / grid.spacing();
    let i = pos.round();
    ((pos - i).abs() < 1e-9 && i >= 0.0 && (i as usize) < grid.n_points()).then_some(i as usize)
}

fn validate_run(command: Command, r: &RunSection, params: &BoxParams, grid: &Grid) -> CliResult<()> {
    let l = params.half_width;
    match command {
        Command::Eigen => check(r.m_max >= 1, "run.m_max", "must be >= 1"),
        Command::Evolve => {
            check(r.m_max >= 1, "run.m_max", "must be >= 1")?;
            check(!r.times.is_empty(), "run.times", "must not be empty")?;
            finite_all("run.times", &r.times)?;
            check(r.packet_width > 0.0 && r.packet_width.is_finite(), "run.packet_width", "must be > 0")?;
            check(r.packet_center.abs() < l, "run.packet_center", "must lie inside the box")?;
            check(r.packet_k0.is_finite(), "run.packet_k0", "must be finite")
        }
        Command::Green => {
            check(!r.x0.is_empty(), "run.x0", "must not be empty")?;
            finite_all("run.x0", &r.x0)?;
            check(r.x0.iter().all(|x| x.abs() <= l), "run.x0", "sources must lie in [-L, L]")?;
            check(r.t.is_finite(), "run.t", "must be finite")?;
            if let Some(eta) = r.eta {
                check(eta > 0.0 && eta.is_finite(), "run.eta", "must be > 0")?;
            }
            match r.method {
                GreenMethod::Spectral => check(r.m_max >= 1, "run.m_max", "must be >= 1"),
                GreenMethod::Images => {
                    check(r.sector == SectorChoice::Odd, "run.sector", "image sums give the odd sector only")?;
                    check(r.l_max >= 10, "run.l_max", "must be >= 10")?;
                    check(
                        r.x0.iter().all(|&x| node_index(grid, x).is_some()),
                        "run.x0",
                        "image sums need sources on grid nodes",
                    )
                }
                GreenMethod::Closed => {
                    check(params.is_local(), "run.method", "closed form requires params.alpha = 2")?;
                    check(r.sector == SectorChoice::Odd, "run.sector", "closed form gives the odd sector only")?;
                    check(r.l_max >= 1, "run.l_max", "must be >= 1")?;
                    check(r.eta.is_some() || r.t != 0.0, "run.t", "must be nonzero without eta")
                }
            }
        }
        Command::ApplyOp => check(r.mode >= 1, "run.mode", "must be >= 1"),
        Command::VerifyAppendix => {
            check(!r.appendix_m.is_empty(), "run.appendix_m", "must not be empty")?;
            check(r.appendix_m.iter().all(|&m| m >= 1), "run.appendix_m", "must be >= 1")?;
            check(r.appendix_eigen_m.iter().all(|&m| m >= 1), "run.appendix_eigen_m", "must be >= 1")?;
            check(
                !r.appendix_alpha.is_empty() && r.appendix_alpha.iter().all(|&a| a > 1.0 && a <= 2.0),
                "run.appendix_alpha",
                "each alpha must lie in (1, 2]",
            )?;
            check(r.appendix_tol > 0.0, "run.appendix_tol", "must be > 0")
        }
        Command::CkCheck => {
            check(
                !r.ck_alpha.is_empty() && r.ck_alpha.iter().all(|&a| a > 0.0 && a <= 2.0),
                "run.ck_alpha",
                "each alpha must lie in (0, 2]",
            )?;
            check(r.ck_t > 0.0 && r.ck_t.is_finite(), "run.ck_t", "must be > 0")?;
            check(r.ck_points >= 16, "run.ck_points", "must be >= 16")?;
            check(r.ck_half_width > 0.0 && r.ck_half_width.is_finite(), "run.ck_half_width", "must be > 0")?;
            check(r.ck_tol > 0.0, "run.ck_tol", "must be > 0")
        }
        Command::Dos | Command::Walls => {
            check(r.e_min.is_finite() && r.e_max > r.e_min, "run.e_max", "must exceed e_min")?;
            check(r.n_energies >= 2, "run.n_energies", "must be >= 2")?;
            check(r.sigma > 0.0, "run.sigma", "must be > 0")?;
            check(r.band_m_max >= 1, "run.band_m_max", "must be >= 1")?;
            check(r.n_min <= r.n_max, "run.n_min", "must not exceed n_max")?;
            check(r.xi_samples >= 64, "run.xi_samples", "must be >= 64")
        }
    }
}
