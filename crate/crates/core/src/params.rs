//! Physical configuration, sampling grids and quadrature controls shared by
//! every module.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Physical configuration of the well: Levy index, generalized diffusion
/// coefficient, action scale and half-width `L` of the box `[-L, L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxParams {
    pub alpha: f64,
    pub d_alpha: f64,
    pub hbar: f64,
    pub half_width: f64,
}

impl BoxParams {
    pub fn new(alpha: f64, d_alpha: f64, hbar: f64, half_width: f64) -> Result<Self> {
        let p = BoxParams {
            alpha,
            d_alpha,
            hbar,
            half_width,
        };
        p.validate()?;
        Ok(p)
    }

    /// Standard local box (`alpha = 2`) for a particle of the given mass.
    pub fn local(mass: f64, hbar: f64, half_width: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid("mass", "must be finite and > 0"));
        }
        Self::new(2.0, 0.5 / mass, hbar, half_width)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 1.0 && self.alpha <= 2.0) {
            return Err(Error::invalid("alpha", format!("{} is outside (1, 2]", self.alpha)));
        }
        positive("d_alpha", self.d_alpha)?;
        positive("hbar", self.hbar)?;
        positive("half_width", self.half_width)?;
        Ok(())
    }

    /// Mass of the equivalent local particle, `1 / (2 D)`.
    pub fn mass(&self) -> f64 {
        0.5 / self.d_alpha
    }

    pub fn is_local(&self) -> bool {
        self.alpha == 2.0
    }
}

impl Default for BoxParams {
    fn default() -> Self {
        BoxParams {
            alpha: 1.5,
            d_alpha: 1.0,
            hbar: 1.0,
            half_width: 1.0,
        }
    }
}

pub(crate) fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{v} must be finite and > 0")))
    }
}

/// Uniform grid over `[-L, L]` including both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n_points: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(n_points: usize, half_width: f64) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::invalid("n_points", format!("{n_points} < 3")));
        }
        positive("half_width", half_width)?;
        Ok(Grid {
            n_points,
            half_width,
        })
    }

    pub fn for_box(n_points: usize, params: &BoxParams) -> Result<Self> {
        Self::new(n_points, params.half_width)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n_points - 1) as f64
    }

    /// Node `i`. Computed symmetrically so that `node(i) == -node(n-1-i)` exactly.
    pub fn node(&self, i: usize) -> f64 {
        let n1 = (self.n_points - 1) as f64;
        let i = i as f64;
        self.half_width * (2.0 * i - n1) / n1
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.node(i)).collect()
    }

    /// Composite trapezoid weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n_points];
        w[0] = 0.5 * h;
        w[self.n_points - 1] = 0.5 * h;
        w
    }

    /// Every other node of this grid; requires an odd number of points.
    pub fn coarsened(&self) -> Option<Grid> {
        if self.n_points % 2 == 1 && self.n_points >= 5 {
            Some(Grid {
                n_points: (self.n_points + 1) / 2,
                half_width: self.half_width,
            })
        } else {
            None
        }
    }

    pub(crate) fn matches(&self, half_width: f64) -> bool {
        (self.half_width - half_width).abs() <= 1e-14 * half_width.abs().max(1.0)
    }
}

/// Complex samples of a wavefunction or kernel, one per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        GridFunction { grid, values }
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Samples a box wavefunction; endpoint values are forced to exact zero.
    pub fn box_wavefunction(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let mut g = Self::from_fn(grid, f);
        let n = g.values.len();
        g.values[0] = Complex64::new(0.0, 0.0);
        g.values[n - 1] = Complex64::new(0.0, 0.0);
        g
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Checks the box boundary condition `psi(+-L) = 0` exactly.
    pub fn check_box_boundary(&self) -> Result<()> {
        let n = self.values.len();
        let (a, b) = (self.values[0], self.values[n - 1]);
        if a.norm() != 0.0 || b.norm() != 0.0 {
            return Err(Error::BoundaryViolation(format!(
                "psi(-L) = {a}, psi(L) = {b}; both must be exactly zero"
            )));
        }
        Ok(())
    }

    /// Trapezoid estimate of the squared L2 norm.
    pub fn norm_sqr(&self) -> f64 {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.norm_sqr())
            .sum()
    }

    /// Trapezoid inner product `<self, other>` (conjugate-linear in `self`).
    pub fn inner(&self, other: &GridFunction) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("inner product of functions on different grids".into()));
        }
        Ok(self
            .grid
            .trapezoid_weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| a.conj() * b * *w)
            .sum())
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Cutoffs, regularization and tolerances for the oscillatory and singular
/// integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Truncation of momentum integrals.
    pub k_cutoff: f64,
    /// Gaussian regularization `exp(-eta k^2)`; the largest level of the eta ladder.
    pub eta: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    /// Defaults scaled to the box: `eta = 1e-2 (L/pi)^2`, `k_cutoff = 2000 / L`.
    pub fn for_box(params: &BoxParams) -> Self {
        let l = params.half_width;
        QuadratureSpec {
            k_cutoff: 2000.0 / l,
            eta: 1e-2 * (l / PI).powi(2),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("k_cutoff", self.k_cutoff)?;
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::invalid("eta", format!("{} must be finite and >= 0", self.eta)));
        }
        for (name, v) in [("abs_tol", self.abs_tol), ("rel_tol", self.rel_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(name, format!("{v} is outside (0, 1)")));
            }
        }
        if self.max_subdivisions == 0 {
            return Err(Error::invalid("max_subdivisions", "must be positive"));
        }
        Ok(())
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            k_cutoff: 2000.0,
            eta: 1e-2 / (PI * PI),
            abs_tol: 1e-9,
            rel_tol: 1e-6,
            max_subdivisions: 2_000_000,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_params_rejects_out_of_range_alpha() {
        assert!(BoxParams::new(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(BoxParams::new(2.5, 1.0, 1.0, 1.0).is_err());
        assert!(BoxParams::new(2.0, 1.0, 1.0, 1.0).is_ok());
        assert!(BoxParams::new(1.5, 0.0, 1.0, 1.0).is_err());
        assert!(BoxParams::new(1.5, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn grid_is_symmetric_and_includes_endpoints() {
        let g = Grid::new(11, 2.0).unwrap();
        assert_eq!(g.node(0), -2.0);
        assert_eq!(g.node(10), 2.0);
        assert_eq!(g.node(5), 0.0);
        for i in 0..11 {
            assert_eq!(g.node(i), -g.node(10 - i));
        }
        assert!((g.spacing() - 0.4).abs() < 1e-15);
        assert!(Grid::new(2, 1.0).is_err());
    }

    #[test]
    fn boundary_check_is_exact() {
        let g = Grid::new(9, 1.0).unwrap();
        let f = GridFunction::from_real_fn(g, |x| (PI * x).sin());
        // sin(pi) is not exactly zero in floating point
        assert!(f.check_box_boundary().is_err());
        let f = GridFunction::box_wavefunction(g, |x| Complex64::new((PI * x).sin(), 0.0));
        assert!(f.check_box_boundary().is_ok());
    }
}
