//! Odd-sector trace, static density of states, and quasienergy bands for a
//! well whose half-width oscillates as `L + epsilon sin(nu t)`.
//!
//! Quasienergy functions use `hbar = 1`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;
use crate::params::{positive, BoxParams};

/// Largest admissible `epsilon / L`.
pub const MAX_RELATIVE_AMPLITUDE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovingWallParams {
    pub epsilon: f64,
    pub nu: f64,
    pub base: BoxParams,
}

impl MovingWallParams {
    pub fn new(epsilon: f64, nu: f64, base: BoxParams) -> Result<Self> {
        let w = MovingWallParams { epsilon, nu, base };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.base.hbar != 1.0 {
            return Err(Error::invalid("hbar", "moving-wall spectra use hbar = 1"));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::invalid("epsilon", format!("{} must be >= 0", self.epsilon)));
        }
        if self.epsilon / self.base.half_width >= MAX_RELATIVE_AMPLITUDE {
            return Err(Error::invalid(
                "epsilon",
                format!("epsilon / L = {} is not below {MAX_RELATIVE_AMPLITUDE}", self.epsilon / self.base.half_width),
            ));
        }
        positive("nu", self.nu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Exact,
    First,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandRecord {
    pub m: u32,
    pub n: i32,
    pub e_min: f64,
    pub e_max: f64,
    pub center: f64,
    pub half_width_first_order: f64,
}

/// `sum_{m=1}^{m_max} exp(-i E_m t / hbar)` over the odd levels. Every term
/// has unit modulus, so no bound on the dropped tail exists.
pub fn trace_g0(t: f64, params: &BoxParams, m_max: u32) -> Result<Complex64> {
    params.validate()?;
    if m_max == 0 {
        return Err(Error::invalid("m_max", "must be >= 1"));
    }
    if !t.is_finite() {
        return Err(Error::invalid("t", "must be finite"));
    }
    Ok((1..=m_max)
        .map(|m| Complex64::from_polar(1.0, -odd_level(m, params) * t / params.hbar))
        .sum())
}

fn odd_level(m: u32, params: &BoxParams) -> f64 {
    params.d_alpha * (params.hbar * PI * m as f64 / params.half_width).powf(params.alpha)
}

/// Density of states sampled on an energy grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DosCurve {
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
    pub warnings: Vec<String>,
}

fn check_energy_grid(e_grid: &[f64]) -> Result<f64> {
    if e_grid.len() < 2 {
        return Err(Error::invalid("e_grid", "needs at least two energies"));
    }
    let mut spacing: f64 = 0.0;
    for w in e_grid.windows(2) {
        let d = w[1] - w[0];
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::invalid("e_grid", "must be finite and strictly increasing"));
        }
        spacing = spacing.max(d);
    }
    Ok(spacing)
}

/// `hbar sum_m g_sigma(E - E_m)` with unit-mass Gaussians over the odd levels.
pub fn dos_static(e_grid: &[f64], params: &BoxParams, sigma: f64) -> Result<DosCurve> {
    params.validate()?;
    positive("sigma", sigma)?;
    let spacing = check_energy_grid(e_grid)?;
    let mut warnings = Vec::new();
    if sigma < 3.0 * spacing {
        let msg = format!("dos_static: sigma {sigma} is below three grid spacings ({spacing})");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let e_top = e_grid[e_grid.len() - 1] + 40.0 * sigma;
    let mut levels = Vec::new();
    let mut m = 1;
    loop {
        let e = odd_level(m, params);
        if e > e_top {
            break;
        }
        levels.push(e);
        m += 1;
    }
    let norm = params.hbar / (sigma * (2.0 * PI).sqrt());
    let values = par::map_slice(e_grid, |&e| {
        levels
            .iter()
            .map(|l| {
                let u = (e - l) / sigma;
                (-0.5 * u * u).exp()
            })
            .sum::<f64>()
            * norm
    });
    Ok(DosCurve {
        energies: e_grid.to_vec(),
        values,
        warnings,
    })
}

/// Level `(m, n)` of the band at parameter `xi`.
pub fn quasienergy(m: u32, n: i32, xi: f64, walls: &MovingWallParams, order: Order) -> Result<f64> {
    walls.validate()?;
    if m == 0 {
        return Err(Error::invalid("m", "must be >= 1"));
    }
    if !(xi.abs() <= PI) {
        return Err(Error::invalid("xi", format!("{xi} outside [-pi, pi]")));
    }
    let b = &walls.base;
    let a = b.alpha;
    let k = PI * m as f64;
    let shift = n as f64 * walls.nu;
    Ok(match order {
        Order::Exact => shift + b.d_alpha * (k / (b.half_width + walls.epsilon * xi.sin())).powf(a),
        Order::First => {
            shift + b.d_alpha * (k / b.half_width).powf(a) - first_order_amplitude(m, walls) * xi.sin()
        }
    })
}

fn first_order_amplitude(m: u32, walls: &MovingWallParams) -> f64 {
    let b = &walls.base;
    walls.epsilon * b.alpha * b.d_alpha * (PI * m as f64).powf(b.alpha) / b.half_width.powf(b.alpha + 1.0)
}

/// Exact band edges at `xi = +-pi/2` and the first-order half-width.
pub fn band_edges(m: u32, n: i32, walls: &MovingWallParams) -> Result<BandRecord> {
    let e_min = quasienergy(m, n, FRAC_PI_2, walls, Order::Exact)?;
    let e_max = quasienergy(m, n, -FRAC_PI_2, walls, Order::Exact)?;
    Ok(BandRecord {
        m,
        n,
        e_min,
        e_max,
        center: 0.5 * (e_min + e_max),
        half_width_first_order: first_order_amplitude(m, walls),
    })
}

/// Histogram density of the exact bands over uniform bins centred on
/// `e_grid`. Each band carries unit mass spread over `xi_samples` midpoint
/// samples of `xi`; samples outside the grid are dropped.
pub fn dos_bands(
    e_grid: &[f64],
    walls: &MovingWallParams,
    n_range: (i32, i32),
    m_max: u32,
    xi_samples: usize,
) -> Result<DosCurve> {
    walls.validate()?;
    if xi_samples < 64 {
        return Err(Error::invalid("xi_samples", format!("{xi_samples} < 64")));
    }
    if m_max == 0 || n_range.0 > n_range.1 {
        return Err(Error::invalid("n_range", "need m_max >= 1 and n_min <= n_max"));
    }
    let width = check_energy_grid(e_grid)?;
    let e0 = e_grid[0];
    let bins = e_grid.len();
    if e_grid
        .iter()
        .enumerate()
        .any(|(i, e)| (e - (e0 + i as f64 * width)).abs() > 1e-9 * width.max(e.abs()))
    {
        return Err(Error::invalid("e_grid", "band densities need uniform bins"));
    }
    let mut bands = Vec::new();
    for m in 1..=m_max {
        for n in n_range.0..=n_range.1 {
            bands.push(band_edges(m, n, walls)?);
        }
    }
    let mut warnings = Vec::new();
    let mut sorted = bands.clone();
    sorted.sort_by(|a, b| a.e_min.total_cmp(&b.e_min));
    for w in sorted.windows(2) {
        if w[1].e_min < w[0].e_max {
            let msg = format!(
                "dos_bands: band (m={}, n={}) overlaps band (m={}, n={})",
                w[0].m, w[0].n, w[1].m, w[1].n
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    let mass = 1.0 / xi_samples as f64;
    let per_band = par::map_slice(&bands, |band| -> Result<Vec<(usize, f64)>> {
        let mut hits = Vec::new();
        for j in 0..xi_samples {
            let xi = -PI + (j as f64 + 0.5) * 2.0 * PI / xi_samples as f64;
            let e = quasienergy(band.m, band.n, xi, walls, Order::Exact)?;
            let pos = ((e - e0) / width + 0.5).floor();
            if pos >= 0.0 && pos < bins as f64 {
                hits.push((pos as usize, mass));
            }
        }
        Ok(hits)
    });
    let mut values = vec![0.0; bins];
    for hits in per_band {
        for (bin, m) in hits? {
            values[bin] += m / width;
        }
    }
    Ok(DosCurve {
        energies: e_grid.to_vec(),
        values,
        warnings,
    })
}
