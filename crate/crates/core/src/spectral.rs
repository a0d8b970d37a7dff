//! Closed-form eigenpairs of the box operator and spectral time evolution.
//!
//! Odd modes: `sin(m pi x / L) / sqrt(L)`, `E = D (hbar m pi / L)^alpha`, `m >= 1`.
//! Even modes: `cos((2m+1) pi x / (2L)) / sqrt(L)`,
//! `E = D (hbar (2m+1) pi / (2L))^alpha`, `m >= 0`.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;
use crate::params::{BoxParams, Grid, GridFunction};

/// Relative truncation residual of [`project`] above which a warning is recorded.
pub const PROJECTION_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Parity::Odd => "odd",
            Parity::Even => "even",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenMode {
    pub parity: Parity,
    pub index: u32,
    pub wavenumber: f64,
    pub energy: f64,
    pub half_width: f64,
}

impl EigenMode {
    pub fn new(parity: Parity, index: u32, params: &BoxParams) -> Result<Self> {
        params.validate()?;
        let l = params.half_width;
        let wavenumber = match parity {
            Parity::Odd if index == 0 => {
                return Err(Error::invalid("index", "odd modes start at m = 1"));
            }
            Parity::Odd => index as f64 * PI / l,
            Parity::Even => (2 * index + 1) as f64 * PI / (2.0 * l),
        };
        Ok(EigenMode {
            parity,
            index,
            wavenumber,
            energy: params.d_alpha * (params.hbar * wavenumber).powf(params.alpha),
            half_width: l,
        })
    }

    /// `Psi(x)`, exactly zero at and beyond the walls.
    pub fn value_at(&self, x: f64) -> f64 {
        let l = self.half_width;
        if x.abs() >= l {
            return 0.0;
        }
        let norm = 1.0 / l.sqrt();
        match self.parity {
            Parity::Odd => norm * (self.wavenumber * x).sin(),
            Parity::Even => norm * (self.wavenumber * x).cos(),
        }
    }

    /// Energy-ascending order, odd before even on ties.
    pub fn spectral_cmp(&self, other: &EigenMode) -> Ordering {
        self.energy
            .total_cmp(&other.energy)
            .then(self.parity.cmp(&other.parity))
            .then(self.index.cmp(&other.index))
    }
}

/// Closed-form energy of a mode.
pub fn eigenvalue(parity: Parity, index: u32, params: &BoxParams) -> Result<f64> {
    Ok(EigenMode::new(parity, index, params)?.energy)
}

/// `m_max` odd modes (`m = 1..=m_max`) and `m_max` even modes
/// (`m = 0..m_max`), merged in energy order.
pub fn modes_up_to(m_max: u32, params: &BoxParams) -> Result<Vec<EigenMode>> {
    let mut modes = Vec::with_capacity(2 * m_max as usize);
    for m in 1..=m_max {
        modes.push(EigenMode::new(Parity::Odd, m, params)?);
    }
    for m in 0..m_max {
        modes.push(EigenMode::new(Parity::Even, m, params)?);
    }
    modes.sort_by(EigenMode::spectral_cmp);
    Ok(modes)
}

/// Samples a mode on a grid; the endpoint values are exactly zero.
pub fn eigenfunction(mode: &EigenMode, grid: &Grid) -> Result<GridFunction> {
    if !grid.matches(mode.half_width) {
        return Err(Error::GridMismatch(format!(
            "grid half-width {} does not match L = {}",
            grid.half_width(),
            mode.half_width
        )));
    }
    Ok(GridFunction::box_wavefunction(*grid, |x| {
        Complex64::new(mode.value_at(x), 0.0)
    }))
}

/// Expansion coefficients over a finite set of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub params: BoxParams,
    pub entries: Vec<(EigenMode, Complex64)>,
    /// `||psi_0||^2 - sum |a|^2` recorded at projection time.
    pub truncation_residual: f64,
    pub warnings: Vec<String>,
}

impl SpectralState {
    pub fn new(params: BoxParams, entries: Vec<(EigenMode, Complex64)>) -> Result<Self> {
        for (i, (a, _)) in entries.iter().enumerate() {
            if entries[..i]
                .iter()
                .any(|(b, _)| b.parity == a.parity && b.index == a.index)
            {
                return Err(Error::invalid("entries", "duplicate mode"));
            }
        }
        Ok(SpectralState {
            params,
            entries,
            truncation_residual: 0.0,
            warnings: Vec::new(),
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    pub fn coefficient(&self, parity: Parity, index: u32) -> Option<Complex64> {
        self.entries
            .iter()
            .find(|(m, _)| m.parity == parity && m.index == index)
            .map(|(_, a)| *a)
    }

    pub fn max_coeff_diff(&self, other: &SpectralState) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|((_, a), (_, b))| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Coefficients `a_E = <Psi_E, psi_0>` by trapezoid quadrature for the modes
/// of [`modes_up_to`]. Rejects initial data that violate `psi(+-L) = 0`.
pub fn project(psi0: &GridFunction, params: &BoxParams, m_max: u32) -> Result<SpectralState> {
    psi0.check_box_boundary()?;
    let grid = *psi0.grid();
    if !grid.matches(params.half_width) {
        return Err(Error::GridMismatch("psi0 grid does not match L".into()));
    }
    let modes = modes_up_to(m_max, params)?;
    let weights = grid.trapezoid_weights();
    let nodes = grid.nodes();
    let values = psi0.values();
    let coeffs = par::map_slice(&modes, |mode| {
        nodes
            .iter()
            .zip(&weights)
            .zip(values)
            .map(|((x, w), v)| v * (mode.value_at(*x) * w))
            .sum::<Complex64>()
    });
    let norm0 = psi0.norm_sqr();
    let mut state = SpectralState::new(*params, modes.into_iter().zip(coeffs).collect())?;
    state.truncation_residual = norm0 - state.norm_sqr();
    if state.truncation_residual.abs() > PROJECTION_REL_TOL * norm0 {
        let msg = format!(
            "project: truncation residual {:.3e} exceeds {:.1e} of ||psi0||^2 = {:.6e}",
            state.truncation_residual, PROJECTION_REL_TOL, norm0
        );
        log::warn!("{msg}");
        state.warnings.push(msg);
    }
    Ok(state)
}

/// Multiplies each coefficient by `exp(-i E t / hbar)`.
pub fn evolve(state: &SpectralState, t: f64) -> SpectralState {
    let hbar = state.params.hbar;
    let entries = state
        .entries
        .iter()
        .map(|(mode, a)| (*mode, a * Complex64::from_polar(1.0, -mode.energy * t / hbar)))
        .collect();
    SpectralState {
        params: state.params,
        entries,
        truncation_residual: state.truncation_residual,
        warnings: state.warnings.clone(),
    }
}

/// Pointwise sum `sum_E a_E Psi_E(x)` on the grid.
pub fn reconstruct(state: &SpectralState, grid: &Grid) -> Result<GridFunction> {
    if !grid.matches(state.params.half_width) {
        return Err(Error::GridMismatch("grid does not match L".into()));
    }
    let nodes = grid.nodes();
    let values = par::map_slice(&nodes, |&x| {
        state
            .entries
            .iter()
            .map(|(mode, a)| a * mode.value_at(x))
            .sum::<Complex64>()
    });
    GridFunction::new(*grid, values)
}
