//! Command dispatch. Every command computes all of its tables first; the
//! tables are then rendered, written one file at a time, and the manifest
//! goes last.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use levybox::operator::{
    appendix_eigen_profile, appendix_k_integral, appendix_k_integral_exact, apply_operator_realspace,
    residue_formula,
};
use levybox::propagator::{
    green_box_alpha2, green_box_alpha2_regularized, green_images_sources, green_images_sources_regularized,
    green_spectral_damped, Damping, GreenEvaluation, Sector,
};
use levybox::spectral::{eigenfunction, evolve, modes_up_to, project, reconstruct, EigenMode, Parity};
use levybox::stable::chapman_kolmogorov_residual;
use levybox::walls::{band_edges, dos_bands, dos_static};
use levybox::{BoxParams, Grid, GridFunction};
use num_complex::Complex64;

use crate::config::{node_index, Command, Format, GreenMethod, RunConfig, SectorChoice};
use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_hex, OutputRecord, RunManifest};
use crate::row;
use crate::table::{self, Cell, Schema};

/// Cap on distinct warnings carried into the manifest.
const MAX_WARNINGS: usize = 64;

struct Table {
    stem: &'static str,
    schema: Schema,
    rows: Vec<Vec<Cell>>,
}

#[derive(Default)]
struct Output {
    tables: Vec<Table>,
    budgets: BTreeMap<String, f64>,
    warnings: Vec<String>,
    failures: Vec<String>,
}

impl Output {
    fn table(&mut self, stem: &'static str, schema: Schema, rows: Vec<Vec<Cell>>) {
        self.tables.push(Table { stem, schema, rows });
    }

    fn budget(&mut self, key: &str, value: f64) {
        let slot = self.budgets.entry(key.to_string()).or_insert(0.0);
        *slot = slot.max(value);
    }

    fn warn(&mut self, msgs: impl IntoIterator<Item = String>) {
        for m in msgs {
            if self.warnings.len() < MAX_WARNINGS && !self.warnings.contains(&m) {
                self.warnings.push(m);
            }
        }
    }
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

/// Runs a validated configuration and writes its artifacts.
pub fn run(cfg: &RunConfig) -> CliResult<RunManifest> {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let clock = Instant::now();
    let out = compute(cfg)?;

    // render everything first so a bad row leaves no partial output behind
    let mut rendered = Vec::with_capacity(out.tables.len());
    for t in &out.tables {
        rendered.push(table::render(&t.schema, &t.rows, cfg.format)?);
    }
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut outputs = Vec::new();
    for (t, bytes) in out.tables.iter().zip(rendered) {
        let file = format!("{}.{}", t.stem, extension(cfg.format));
        write_bytes(&dir.join(&file), &bytes)?;
        outputs.push(OutputRecord {
            file,
            table: t.schema.name.to_string(),
            rows: t.rows.len(),
            bytes: bytes.len(),
            sha256: sha256_hex(&bytes),
        });
    }
    let manifest = RunManifest {
        toolkit: "levybox",
        version: env!("CARGO_PKG_VERSION"),
        command: cfg.command.as_str(),
        status: if out.failures.is_empty() { "ok" } else { "checks-failed" },
        started_unix_ms: started,
        duration_seconds: clock.elapsed().as_secs_f64(),
        config: cfg.echo.clone(),
        error_budgets: out.budgets,
        failed_checks: out.failures,
        warnings: out.warnings,
        outputs,
    };
    manifest.write(dir)?;
    Ok(manifest)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn compute(cfg: &RunConfig) -> CliResult<Output> {
    let mut out = Output::default();
    match cfg.command {
        Command::Eigen => eigen(cfg, &mut out)?,
        Command::Evolve => evolve_packet(cfg, &mut out)?,
        Command::Green => green(cfg, &mut out)?,
        Command::ApplyOp => apply_op(cfg, &mut out)?,
        Command::VerifyAppendix => verify_appendix(cfg, &mut out)?,
        Command::CkCheck => ck_check(cfg, &mut out)?,
        Command::Dos => dos(cfg, &mut out)?,
        Command::Walls => walls(cfg, &mut out)?,
    }
    Ok(out)
}

fn describe(p: &BoxParams) -> String {
    format!("alpha={}, d_alpha={}, hbar={}, L={}", p.alpha, p.d_alpha, p.hbar, p.half_width)
}

fn eigen(cfg: &RunConfig, out: &mut Output) -> CliResult<()> {
    let m_max = cfg.run.m_max;
    let modes = modes_up_to(m_max, &cfg.params)
        .map_err(|e| CliError::op("modes_up_to", format!("m_max={m_max}, {}", describe(&cfg.params)), e))?;
    let rows = modes
        .iter()
        .map(|m| row![m.parity.as_str(), m.index, m.wavenumber, m.energy])
        .collect();
    out.table("eigen", table::EIGEN, rows);
    Ok(())
}

fn packet(cfg: &RunConfig) -> GridFunction {
    let r = &cfg.run;
    let psi = GridFunction::box_wavefunction(cfg.grid, |x| {
        let u = (x - r.packet_center) / r.packet_width;
        Complex64::from_polar((-0.5 * u * u).exp(), r.packet_k0 * x)
    });
    let scale = 1.0 / psi.norm_sqr().sqrt();
    let values = psi.values().iter().map(|v| v * scale).collect();
    GridFunction::new(cfg.grid, values).expect("same grid")
}

fn evolve_packet(cfg: &RunConfig, out: &mut Output) -> CliResult<()> {
    let psi = packet(cfg);
    let m_max = cfg.run.m_max;
    let state = project(&psi, &cfg.params, m_max)
        .map_err(|e| CliError::op("project", format!("m_max={m_max}, {}", describe(&cfg.params)), e))?;
    out.budget("project.truncation_residual", state.truncation_residual.abs());
    out.warn(state.warnings.iter().cloned());
    let nodes = cfg.grid.nodes();
    let mut rows = Vec::with_capacity(nodes.len() * cfg.run.times.len());
    for &t in &cfg.run.times {
        let psi_t = reconstruct(&evolve(&state, t), &cfg.grid).map_err(|e| CliError::op("reconstruct", format!("t={t}"), e))?;
        for (x, v) in nodes.iter().zip(psi_t.values()) {
            rows.push(row![*x, v.re, v.im, t]);
        }
    }
    out.table("evolve", table::EVOLVE, rows);
    Ok(())
}

fn sector(choice: SectorChoice) -> Sector {
    match choice {
        SectorChoice::Odd => Sector::Odd,
        SectorChoice::Even => Sector::Even,
        SectorChoice::Both => Sector::Both,
    }
}

fn green(cfg: &RunConfig, out: &mut Output) -> CliResult<()> {
    let r = &cfg.run;
    let (t, p) = (r.t, &cfg.params);
    let nodes = cfg.grid.nodes();
    let n = nodes.len();
    let mut evals: Vec<(f64, f64, GreenEvaluation)> = Vec::with_capacity(n * r.x0.len());
    match r.method {
        GreenMethod::Spectral => {
            let damping = r.eta.map_or(Damping::None, Damping::Gaussian);
            for &x0 in &r.x0 {
                for &x in &nodes {
                    let g = green_spectral_damped(x, x0, t, p, r.m_max, sector(r.sector), damping).map_err(|e| {
                        CliError::op("green_spectral", format!("x={x}, x0={x0}, t={t}, m_max={}", r.m_max), e)
                    })?;
                    evals.push((x, x0, g));
                }
            }
        }
        GreenMethod::Images => {
            let sources: Vec<usize> = r.x0.iter().map(|&x0| node_index(&cfg.grid, x0).expect("validated")).collect();
            let what = format!("x0={:?}, t={t}, l_max={}, {}", r.x0, r.l_max, describe(p));
            let all = match r.eta {
                Some(eta) => green_images_sources_regularized(&cfg.grid, &sources, t, p, r.l_max, eta)
                    .map_err(|e| CliError::op("green_images_regularized", format!("{what}, eta={eta}"), e))?,
                None => green_images_sources(&cfg.grid, &sources, t, p, r.l_max, &cfg.quad)
                    .map_err(|e| CliError::op("green_images", what, e))?,
            };
            for (idx, g) in all.into_iter().enumerate() {
                evals.push((nodes[idx % n], r.x0[idx / n], g));
            }
        }
        GreenMethod::Closed => {
            for &x0 in &r.x0 {
                for &x in &nodes {
                    let g = match r.eta {
                        Some(eta) => green_box_alpha2_regularized(x, x0, t, p, r.l_max, eta),
                        None => green_box_alpha2(x, x0, t, p, r.l_max),
                    }
                    .map_err(|e| CliError::op("green_box_alpha2", format!("x={x}, x0={x0}, t={t}"), e))?;
                    out.budget("green_box_alpha2.cesaro_shift", (g.cesaro.value - g.raw.value).norm());
                    evals.push((x, x0, g.raw));
                }
            }
        }
    }
    let mut rows = Vec::with_capacity(evals.len());
    for (x, x0, g) in evals {
        out.budget(&format!("green.{}", g.method.as_str()), g.error_budget);
        out.warn(g.warnings.iter().cloned());
        rows.push(row![x, x0, t, g.value.re, g.value.im, g.error_budget, g.method.as_str(), g.sector.as_str()]);
    }
    out.table("green", table::GREEN, rows);
    Ok(())
}

fn apply_op(cfg: &RunConfig, out: &mut Output) -> CliResult<()> {
    let m = cfg.run.mode;
    let what = format!("mode={m}, n_points={}, {}", cfg.grid.n_points(), describe(&cfg.params));
    let mode = EigenMode::new(Parity::Odd, m, &cfg.params).map_err(|e| CliError::op("eigenfunction", what.clone(), e))?;
    let psi = eigenfunction(&mode, &cfg.grid).map_err(|e| CliError::op("eigenfunction", what.clone(), e))?;
    let res = apply_operator_realspace(&psi, &cfg.params).map_err(|e| CliError::op("apply_operator_realspace", what, e))?;
    if let Some(s) = res.sentinel_change {
        out.budget("apply_operator_realspace.sentinel_change", s);
    }
    let v = res.values.values();
    let interior = (1..v.len() - 1)
        .map(|i| (v[i] - psi.values()[i] * mode.energy).norm())
        .fold(0.0, f64::max);
    out.budget("apply_operator_realspace.eigen_residual", interior);
    out.warn(res.warnings.iter().cloned());
    let rows = cfg
        .grid
        .nodes()
        .into_iter()
        .zip(psi.values().iter().zip(v))
        .map(|(x, (a, b))| row![x, a.re, a.im, b.re, b.im])
        .collect();
    out.table("apply_op", table::APPLY_OP, rows);
    Ok(())
}

fn verify_appendix(cfg: &RunConfig, out: &mut Output) -> CliResult<()> {
    let r = &cfg.run;
    let base = &cfg.params;
    let l = base.half_width;
    let mut k_rows = Vec::new();
    let mut e_rows = Vec::new();
    for &alpha in &r.appendix_alpha {
        let p = BoxParams::new(alpha, base.d_alpha, base.hbar, l).map_err(|e| CliError::op("verify-appendix", format!("alpha={alpha}"), e))?;
        for &m in &r.appendix_m {
            for x in [-0.5 * l, 0.0, 0.5 * l] {
                let what = format!("m={m}, alpha={alpha}, x={x}");
                let got = appendix_k_integral(m, x, &p, &cfg.quad).map_err(|e| CliError::op("appendix_k_integral", what.clone(), e))?;
                let residue = residue_formula(m, x, &p).map_err(|e| CliError::op("residue_formula", what.clone(), e))?;
                let exact = appendix_k_integral_exact(m, x, &p).map_err(|e| CliError::op("appendix_k_integral_exact", what.clone(), e))?;
                let d_res = (got.value - residue).norm();
                let d_exact = (got.value - exact).norm();
                let pass = d_res < r.appendix_tol;
                if !pass {
                    out.failures.push(format!("appendix_k_integral {what}: |quadrature - residue| = {d_res:.3e}"));
                }
                out.budget("appendix_k_integral", got.error_budget);
                out.budget("appendix_k_integral.vs_exact", d_exact);
                k_rows.push(row![
                    m, alpha, x, got.value.re, got.value.im, residue.re, residue.im, exact.re, exact.im, d_res, d_exact,
                    got.error_budget, pass
                ]);
            }
        }
        for &m in &r.appendix_eigen_m {
            let what = format!("m={m}, alpha={alpha}");
            let prof = appendix_eigen_profile(m, &p, &cfg.quad).map_err(|e| CliError::op("appendix_eigen_profile", what.clone(), e))?;
            let dev = prof.max_relative_deviation();
            let pass = dev < r.appendix_tol;
            if !pass {
                out.failures.push(format!("appendix_eigen_action {what}: max relative deviation = {dev:.3e}"));
            }
            for node in &prof.nodes {
                out.budget("appendix_eigen_profile", node.error_budget);
            }
            e_rows.push(row![m, alpha, prof.mean(), prof.closed_form, dev, prof.relative_spread(), pass]);
        }
    }
    out.table("appendix_k", table::APPENDIX_K, k_rows);
    out.table("appendix_eigen", table::APPENDIX_EIGEN, e_rows);
    Ok(())
}

fn ck_check(cfg: &RunConfig, out: &mut Output) -> CliResult<()> {
    let r = &cfg.run;
    let window = Grid::new(r.ck_points, r.ck_half_width)
        .map_err(|e| CliError::op("ck-check", format!("ck_points={}, ck_half_width={}", r.ck_points, r.ck_half_width), e))?;
    let mut rows = Vec::new();
    for &alpha in &r.ck_alpha {
        let res = chapman_kolmogorov_residual(alpha, r.ck_t, &window)
            .map_err(|e| CliError::op("chapman_kolmogorov_residual", format!("alpha={alpha}, t={}", r.ck_t), e))?;
        let pass = res < r.ck_tol;
        if !pass {
            out.failures.push(format!("chapman_kolmogorov_residual alpha={alpha}: {res:.3e}"));
        }
        out.budget("chapman_kolmogorov_residual", res);
        rows.push(row![alpha, r.ck_t, res, pass]);
    }
    out.table("ck", table::CK, rows);
    Ok(())
}

fn energy_grid(cfg: &RunConfig) -> Vec<f64> {
    let r = &cfg.run;
    let step = (r.e_max - r.e_min) / (r.n_energies - 1) as f64;
    (0..r.n_energies).map(|i| r.e_min + step * i as f64).collect()
}

fn dos(cfg: &RunConfig, out: &mut Output) -> CliResult<()> {
    let r = &cfg.run;
    let e = energy_grid(cfg);
    let curve = match &cfg.walls {
        Some(w) => dos_bands(&e, w, (r.n_min, r.n_max), r.band_m_max, r.xi_samples).map_err(|err| {
            CliError::op("dos_bands", format!("epsilon={}, nu={}, n=[{}, {}]", w.epsilon, w.nu, r.n_min, r.n_max), err)
        })?,
        None => dos_static(&e, &cfg.params, r.sigma)
            .map_err(|err| CliError::op("dos_static", format!("sigma={}, {}", r.sigma, describe(&cfg.params)), err))?,
    };
    out.warn(curve.warnings.iter().cloned());
    let rows = curve.energies.iter().zip(&curve.values).map(|(e, v)| row![*e, *v]).collect();
    out.table("dos", table::DOS, rows);
    Ok(())
}

fn walls(cfg: &RunConfig, out: &mut Output) -> CliResult<()> {
    let r = &cfg.run;
    let w = cfg.walls.as_ref().expect("validated: walls section present");
    let mut rows = Vec::new();
    for m in 1..=r.band_m_max {
        for n in r.n_min..=r.n_max {
            let b = band_edges(m, n, w).map_err(|e| CliError::op("band_edges", format!("m={m}, n={n}"), e))?;
            rows.push(row![b.m, b.n, b.e_min, b.e_max, b.center, b.half_width_first_order]);
        }
    }
    out.table("walls", table::WALLS, rows);
    Ok(())
}
