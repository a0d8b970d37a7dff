//! Box Green's function by spectral sums and by image sums over windings,
//! the closed-form local case, and time-slice composition of the real
//! diffusion kernel inside the box.
//!
//! The image route needs a convergence factor: every free-kernel integral
//! carries `exp(-eta k^2)`. Under that factor the image sum and the odd
//! spectral sum with damping `exp(-eta k_m^2)` coincide term for term.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;
use crate::params::{BoxParams, Grid, QuadratureSpec};
use crate::quadrature::{gl16, graded_breaks};
use crate::spectral::{EigenMode, Parity};
use crate::stable::{lattice_density, tail_mass, StableKernelParams};

/// Truncation estimate above which spectral sums record a warning.
pub const SPECTRAL_WARN_TOL: f64 = 1e-9;

/// Minimum number of windings accepted by the image sums.
pub const MIN_WINDINGS: u32 = 10;

/// Default winding truncation for diffusion kernels.
pub const DIFFUSION_WINDINGS: u32 = 50;

/// Single-step mass outside the windings above which composition warns.
pub const LEAK_TOL: f64 = 1e-10;

const DECAY_EXPONENT: f64 = 45.0;
const PANEL_PHASE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Spectral,
    Images,
    Alpha2Closed,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Spectral => "spectral",
            Method::Images => "images",
            Method::Alpha2Closed => "alpha2_closed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    Odd,
    Even,
    Both,
}

impl Sector {
    pub fn as_str(&self) -> &'static str {
        match self {
            Sector::Odd => "odd",
            Sector::Even => "even",
            Sector::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenEvaluation {
    pub value: Complex64,
    pub error_budget: f64,
    pub method: Method,
    pub sector: Sector,
    pub warnings: Vec<String>,
}

/// Momentum-space damping applied to every mode of a spectral sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Damping {
    None,
    /// `exp(-eta k^2)`.
    Gaussian(f64),
}

fn check_inside(name: &str, x: f64, l: f64) -> Result<()> {
    if x.is_finite() && x.abs() <= l {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{x} outside [-{l}, {l}]")))
    }
}

fn sector_modes(m_max: u32, sector: Sector, params: &BoxParams) -> Result<Vec<EigenMode>> {
    let mut modes = Vec::new();
    if sector != Sector::Even {
        for m in 1..=m_max {
            modes.push(EigenMode::new(Parity::Odd, m, params)?);
        }
    }
    if sector != Sector::Odd {
        for m in 0..m_max {
            modes.push(EigenMode::new(Parity::Even, m, params)?);
        }
    }
    modes.sort_by(EigenMode::spectral_cmp);
    Ok(modes)
}

/// `sum exp(-i E t / hbar) Psi(x) Psi(x0)` over the modes of a sector.
pub fn green_spectral(
    x: f64,
    x0: f64,
    t: f64,
    params: &BoxParams,
    m_max: u32,
    sector: Sector,
) -> Result<GreenEvaluation> {
    green_spectral_damped(x, x0, t, params, m_max, sector, Damping::None)
}

/// [`green_spectral`] with an optional momentum damping. The truncation
/// estimate is the largest deviation of the last decade of partial sums
/// from the final one.
pub fn green_spectral_damped(
    x: f64,
    x0: f64,
    t: f64,
    params: &BoxParams,
    m_max: u32,
    sector: Sector,
    damping: Damping,
) -> Result<GreenEvaluation> {
    params.validate()?;
    check_inside("x", x, params.half_width)?;
    check_inside("x0", x0, params.half_width)?;
    if !t.is_finite() {
        return Err(Error::invalid("t", "must be finite"));
    }
    if m_max == 0 {
        return Err(Error::invalid("m_max", "must be positive"));
    }
    let eta = match damping {
        Damping::None => 0.0,
        Damping::Gaussian(eta) if eta.is_finite() && eta >= 0.0 => eta,
        Damping::Gaussian(eta) => return Err(Error::invalid("eta", format!("{eta} < 0"))),
    };
    let modes = sector_modes(m_max, sector, params)?;
    let mut partial = Vec::with_capacity(modes.len());
    let mut sum = Complex64::new(0.0, 0.0);
    let mut magnitude = 0.0;
    for mode in &modes {
        let amp = mode.value_at(x) * mode.value_at(x0) * (-eta * mode.wavenumber.powi(2)).exp();
        let term = Complex64::from_polar(amp, -mode.energy * t / params.hbar);
        sum += term;
        magnitude += amp.abs();
        partial.push(sum);
    }
    let decade = (partial.len() / 10).max(1);
    let truncation = partial[partial.len() - decade..]
        .iter()
        .map(|s| (s - sum).norm())
        .fold(0.0, f64::max);
    let mut warnings = Vec::new();
    if truncation > SPECTRAL_WARN_TOL {
        let msg = format!(
            "green_spectral: truncation estimate {truncation:.3e} at ({x}, {x0}, {t}) exceeds {SPECTRAL_WARN_TOL:.0e}"
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(GreenEvaluation {
        value: sum,
        error_budget: truncation + 4.0 * f64::EPSILON * magnitude,
        method: Method::Spectral,
        sector,
        warnings,
    })
}

/// Quadrature rule for the regularized free kernel
/// `K(X) = (1/pi) int_0^inf exp(-eta k^2 - i D hbar^(alpha-1) t k^alpha) cos(k X) dk`,
/// sized for `|X| <= reach`.
#[derive(Debug, Clone)]
pub struct FreeKernelRule {
    nodes: Vec<f64>,
    coeffs: Vec<Complex64>,
    reach: f64,
    error_bound: f64,
}

impl FreeKernelRule {
    pub fn new(params: &BoxParams, t: f64, eta: f64, reach: f64) -> Result<Self> {
        params.validate()?;
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::invalid("eta", format!("{eta} must be > 0")));
        }
        if !(t.is_finite() && reach.is_finite() && reach >= 0.0) {
            return Err(Error::invalid("t", "time and reach must be finite"));
        }
        let a = params.alpha;
        let c = params.d_alpha * params.hbar.powf(a - 1.0) * t;
        let slope = |k: f64| a * c.abs() * k.powf(a - 1.0);
        let k_max = (DECAY_EXPONENT / eta).sqrt();
        let gl = gl16();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let w0 = (PANEL_PHASE / (reach + slope(1.0) + 1.0)).min(0.5);
        for w in graded_breaks(w0, 50).windows(2) {
            gl.push_panel(w[0], w[1], &mut nodes, &mut weights);
        }
        let mut k = w0;
        while k < k_max {
            let width = (PANEL_PHASE / (slope(k + 1.0) + reach)).min(1.0);
            let b = (k + width).min(k_max);
            gl.push_panel(k, b, &mut nodes, &mut weights);
            k = b;
        }
        let coeffs: Vec<Complex64> = nodes
            .iter()
            .zip(&weights)
            .map(|(&k, &w)| Complex64::from_polar(w * (-eta * k * k).exp() / PI, -c * k.powf(a)))
            .collect();
        let phase_max = c.abs() * k_max.powf(a);
        let abs_sum: f64 = coeffs.iter().map(|c| c.norm()).sum();
        let truncation = (-eta * k_max * k_max).exp() / (2.0 * PI * eta * k_max);
        let rounding = 8.0 * f64::EPSILON * (1.0 + phase_max + k_max * reach) * abs_sum;
        Ok(FreeKernelRule {
            nodes,
            coeffs,
            reach,
            error_bound: truncation + rounding,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Bound on the quadrature and rounding error of one kernel value.
    pub fn error_bound(&self) -> f64 {
        self.error_bound
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        debug_assert!(x.abs() <= self.reach * (1.0 + 1e-12));
        self.nodes
            .iter()
            .zip(&self.coeffs)
            .map(|(k, c)| c * (k * x).cos())
            .sum()
    }

    /// `K(n h)` for `n = 0..=n_max`, by rotating `exp(i k h)` with an exact
    /// reseed every 64 steps.
    pub fn lattice(&self, h: f64, n_max: usize) -> Vec<Complex64> {
        const BLOCK: usize = 64;
        let steps: Vec<Complex64> = self.nodes.iter().map(|k| Complex64::from_polar(1.0, k * h)).collect();
        let blocks = par::map_range(n_max / BLOCK + 1, |b| {
            let n0 = b * BLOCK;
            let len = BLOCK.min(n_max + 1 - n0);
            let mut acc = vec![Complex64::new(0.0, 0.0); len];
            for ((k, c), r) in self.nodes.iter().zip(&self.coeffs).zip(&steps) {
                let mut z = Complex64::from_polar(1.0, k * h * n0 as f64);
                for slot in acc.iter_mut() {
                    *slot += c * z.re;
                    z *= r;
                }
            }
            acc
        });
        blocks.into_iter().flatten().collect()
    }
}

/// The three regularization levels `eta * {1, 1/10, 1/100}`.
pub fn eta_ladder(quad: &QuadratureSpec) -> [f64; 3] {
    [quad.eta, quad.eta * 0.1, quad.eta * 0.01]
}

/// Quadratic extrapolation to `eta = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub value: Complex64,
    /// Distance from the smallest-eta sample.
    pub error: f64,
    /// Lagrange weights at zero; their absolute sum amplifies level errors.
    pub weights: [f64; 3],
    /// Real and imaginary parts both monotone along the ladder, ignoring
    /// steps no larger than the noise level.
    pub monotone: bool,
}

pub fn extrapolate_eta(etas: &[f64; 3], values: &[Complex64; 3], noise: f64) -> Extrapolation {
    let mut weights = [0.0; 3];
    for i in 0..3 {
        let mut w = 1.0;
        for j in 0..3 {
            if j != i {
                w *= etas[j] / (etas[j] - etas[i]);
            }
        }
        weights[i] = w;
    }
    let value = values.iter().zip(&weights).map(|(v, w)| v * *w).sum::<Complex64>();
    let monotone_in = |f: fn(&Complex64) -> f64| {
        let d1 = f(&values[1]) - f(&values[0]);
        let d2 = f(&values[2]) - f(&values[1]);
        d1.abs() <= noise || d2.abs() <= noise || d1 * d2 >= 0.0
    };
    Extrapolation {
        value,
        error: (value - values[2]).norm(),
        weights,
        monotone: monotone_in(|c| c.re) && monotone_in(|c| c.im),
    }
}

fn check_images_input(params: &BoxParams, t: f64, l_max: u32) -> Result<()> {
    params.validate()?;
    if l_max < MIN_WINDINGS {
        return Err(Error::invalid("l_max", format!("{l_max} < {MIN_WINDINGS}")));
    }
    if !t.is_finite() {
        return Err(Error::invalid("t", "must be finite"));
    }
    Ok(())
}

/// `1/2 sum_{|l| <= l_max} [K(x - x0 + 2lL) - K(x + x0 + 2lL)]` and the
/// winding estimate from the outermost pair of images.
fn image_sum(kernel: impl Fn(f64) -> Complex64, x: f64, x0: f64, l: f64, l_max: u32) -> (Complex64, f64) {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut outer = 0.0;
    let lm = l_max as i64;
    for w in -lm..=lm {
        let shift = 2.0 * w as f64 * l;
        let term = 0.5 * (kernel(x - x0 + shift) - kernel(x + x0 + shift));
        if w.abs() == lm {
            outer += term.norm();
        }
        sum += term;
    }
    (sum, 2.0 * outer)
}

/// Image sum at a single regularization level.
pub fn green_images_regularized(
    x: f64,
    x0: f64,
    t: f64,
    params: &BoxParams,
    l_max: u32,
    eta: f64,
) -> Result<GreenEvaluation> {
    check_images_input(params, t, l_max)?;
    let l = params.half_width;
    check_inside("x", x, l)?;
    check_inside("x0", x0, l)?;
    let reach = 2.0 * l + 2.0 * l_max as f64 * l;
    let rule = FreeKernelRule::new(params, t, eta, reach)?;
    let (value, winding) = image_sum(|s| rule.eval(s), x, x0, l, l_max);
    let terms = (4 * l_max + 2) as f64;
    Ok(GreenEvaluation {
        value,
        error_budget: winding + terms * rule.error_bound(),
        method: Method::Images,
        sector: Sector::Odd,
        warnings: Vec::new(),
    })
}

/// Image sum extrapolated to `eta = 0` over [`eta_ladder`]. The budget sums
/// the winding, extrapolation and amplified per-level quadrature terms.
pub fn green_images(
    x: f64,
    x0: f64,
    t: f64,
    params: &BoxParams,
    l_max: u32,
    quad: &QuadratureSpec,
) -> Result<GreenEvaluation> {
    quad.validate()?;
    if quad.eta <= 0.0 {
        return Err(Error::invalid("eta", "image sums require eta > 0"));
    }
    let etas = eta_ladder(quad);
    let mut levels = Vec::with_capacity(3);
    for eta in etas {
        levels.push(green_images_regularized(x, x0, t, params, l_max, eta)?);
    }
    finish_extrapolation(&etas, &levels, (x, x0, t))
}

fn finish_extrapolation(
    etas: &[f64; 3],
    levels: &[GreenEvaluation],
    at: (f64, f64, f64),
) -> Result<GreenEvaluation> {
    let values = [levels[0].value, levels[1].value, levels[2].value];
    let noise = 2.0 * levels.iter().map(|g| g.error_budget).fold(0.0, f64::max);
    let ex = extrapolate_eta(etas, &values, noise);
    if !ex.monotone {
        return Err(Error::NonMonotoneExtrapolation {
            operation: "green_images".into(),
            detail: format!("at (x, x0, t) = {at:?}: levels {values:?}"),
        });
    }
    let level_budget: f64 = levels
        .iter()
        .zip(&ex.weights)
        .map(|(g, w)| g.error_budget * w.abs())
        .sum();
    Ok(GreenEvaluation {
        value: ex.value,
        error_budget: level_budget + ex.error,
        method: Method::Images,
        sector: Sector::Odd,
        warnings: Vec::new(),
    })
}

/// Regularized image sums for every node pair of a grid, row-major.
pub fn green_images_grid_regularized(
    grid: &Grid,
    t: f64,
    params: &BoxParams,
    l_max: u32,
    eta: f64,
) -> Result<Vec<GreenEvaluation>> {
    let all: Vec<usize> = (0..grid.n_points()).collect();
    green_images_sources_regularized(grid, &all, t, params, l_max, eta)
}

/// Regularized image sums `G(x_i, x_j)` for the source nodes `j` in
/// `sources` and every node `i`, laid out source-major. All shifts lie on
/// the lattice `n h`, so one lattice evaluation of the free kernel serves
/// every pair.
pub fn green_images_sources_regularized(
    grid: &Grid,
    sources: &[usize],
    t: f64,
    params: &BoxParams,
    l_max: u32,
    eta: f64,
) -> Result<Vec<GreenEvaluation>> {
    check_images_input(params, t, l_max)?;
    if !grid.matches(params.half_width) {
        return Err(Error::GridMismatch("grid does not match L".into()));
    }
    let n = grid.n_points();
    if let Some(j) = sources.iter().find(|&&j| j >= n) {
        return Err(Error::invalid("sources", format!("node {j} outside a grid of {n} points")));
    }
    let cells = n - 1;
    let n_max = cells * (l_max as usize + 2);
    let h = grid.spacing();
    let rule = FreeKernelRule::new(params, t, eta, n_max as f64 * h)?;
    let table = rule.lattice(h, n_max);
    let at = |k: i64| table[k.unsigned_abs() as usize];
    let terms = (4 * l_max + 2) as f64;
    let lm = l_max as i64;
    let c = cells as i64;
    Ok(par::map_range(sources.len() * n, |idx| {
        let (j, i) = (sources[idx / n] as i64, (idx % n) as i64);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut outer = 0.0;
        for w in -lm..=lm {
            let term = 0.5 * (at(i - j + w * c) - at(i + j - c + w * c));
            if w.abs() == lm {
                outer += term.norm();
            }
            sum += term;
        }
        GreenEvaluation {
            value: sum,
            error_budget: 2.0 * outer + terms * rule.error_bound(),
            method: Method::Images,
            sector: Sector::Odd,
            warnings: Vec::new(),
        }
    }))
}

/// [`green_images`] for every node pair of a grid, row-major.
pub fn green_images_grid(
    grid: &Grid,
    t: f64,
    params: &BoxParams,
    l_max: u32,
    quad: &QuadratureSpec,
) -> Result<Vec<GreenEvaluation>> {
    let all: Vec<usize> = (0..grid.n_points()).collect();
    green_images_sources(grid, &all, t, params, l_max, quad)
}

/// [`green_images`] for the source nodes in `sources`, source-major.
pub fn green_images_sources(
    grid: &Grid,
    sources: &[usize],
    t: f64,
    params: &BoxParams,
    l_max: u32,
    quad: &QuadratureSpec,
) -> Result<Vec<GreenEvaluation>> {
    quad.validate()?;
    if quad.eta <= 0.0 {
        return Err(Error::invalid("eta", "image sums require eta > 0"));
    }
    let etas = eta_ladder(quad);
    let mut per_level = Vec::with_capacity(3);
    for eta in etas {
        per_level.push(green_images_sources_regularized(grid, sources, t, params, l_max, eta)?);
    }
    let n = grid.n_points();
    let mut out = Vec::with_capacity(per_level[0].len());
    for idx in 0..per_level[0].len() {
        let levels = [
            per_level[0][idx].clone(),
            per_level[1][idx].clone(),
            per_level[2][idx].clone(),
        ];
        out.push(finish_extrapolation(
            &etas,
            &levels,
            (grid.node(idx % n), grid.node(sources[idx / n]), t),
        )?);
    }
    Ok(out)
}

/// Local-case image sum with raw and Cesaro-averaged partial sums over windings.
#[derive(Debug, Clone, PartialEq)]
pub struct Alpha2Green {
    pub raw: GreenEvaluation,
    pub cesaro: GreenEvaluation,
}

/// Closed-form image sum for `alpha = 2` with `m = 1/(2D)`:
/// `sum_l sqrt(m/(8 pi i hbar t)) [exp(i m (x-x0+2lL)^2/(2 hbar t)) - exp(i m (x+x0+2lL)^2/(2 hbar t))]`.
pub fn green_box_alpha2(x: f64, x0: f64, t: f64, params: &BoxParams, l_max: u32) -> Result<Alpha2Green> {
    if t == 0.0 {
        return Err(Error::invalid("t", "must be nonzero"));
    }
    green_box_alpha2_regularized(x, x0, t, params, l_max, 0.0)
}

/// [`green_box_alpha2`] with each image Gaussian-regularized:
/// `1/2 (4 pi s)^(-1/2) exp(-X^2 / (4 s))`, `s = eta + i D hbar t`.
pub fn green_box_alpha2_regularized(
    x: f64,
    x0: f64,
    t: f64,
    params: &BoxParams,
    l_max: u32,
    eta: f64,
) -> Result<Alpha2Green> {
    params.validate()?;
    if !params.is_local() {
        return Err(Error::invalid("alpha", "closed form requires alpha = 2"));
    }
    let l = params.half_width;
    check_inside("x", x, l)?;
    check_inside("x0", x0, l)?;
    if !(t.is_finite() && eta.is_finite() && eta >= 0.0) || (eta == 0.0 && t == 0.0) {
        return Err(Error::invalid("t", "need finite t and eta >= 0, not both zero"));
    }
    let s = Complex64::new(eta, params.d_alpha * params.hbar * t);
    let norm = 0.5 / (4.0 * PI * s).sqrt();
    let image = |d: f64| norm * (-d * d / (4.0 * s)).exp();
    let winding = |w: i64| {
        let shift = 2.0 * w as f64 * l;
        image(x - x0 + shift) - image(x + x0 + shift)
    };
    let mut partial = winding(0);
    let mut sums = vec![partial];
    for w in 1..=l_max as i64 {
        partial += winding(w) + winding(-w);
        sums.push(partial);
    }
    let means: Vec<Complex64> = sums
        .iter()
        .scan(Complex64::new(0.0, 0.0), |acc, s| {
            *acc += s;
            Some(*acc)
        })
        .enumerate()
        .map(|(i, total)| total / (i + 1) as f64)
        .collect();
    let last = |v: &[Complex64]| {
        let k = v.len();
        if k > 1 {
            (v[k - 1] - v[k - 2]).norm()
        } else {
            v[0].norm()
        }
    };
    let rounding = 8.0 * f64::EPSILON * norm.norm() * (2 * l_max + 1) as f64;
    let eval = |value: Complex64, budget: f64| GreenEvaluation {
        value,
        error_budget: budget + rounding,
        method: Method::Alpha2Closed,
        sector: Sector::Odd,
        warnings: Vec::new(),
    };
    Ok(Alpha2Green {
        raw: eval(*sums.last().unwrap(), last(&sums)),
        cesaro: eval(*means.last().unwrap(), last(&means)),
    })
}

/// Composition of the real diffusion kernel inside the box.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedKernel {
    pub n_points: usize,
    /// `n_steps`-fold product of the single-step kernel, row-major.
    pub composed: Vec<f64>,
    /// Kernel built directly at the full time, row-major.
    pub direct: Vec<f64>,
    /// Max-norm of `composed - direct`.
    pub residual: f64,
    /// Single-step mass estimated beyond the windings.
    pub leak: f64,
    /// Smallest composed entry over interior pairs on the same side of the centre.
    pub min_same_side: f64,
    pub warnings: Vec<String>,
}

impl ComposedKernel {
    pub fn composed_at(&self, i: usize, j: usize) -> f64 {
        self.composed[i * self.n_points + j]
    }
}

/// Box kernel `sum_l [p(x_i - x_j + 2lL) - p(x_i + x_j + 2lL)]` on the grid
/// nodes, with the wall rows and columns set to the Dirichlet value zero.
pub fn box_kernel(p: &StableKernelParams, grid: &Grid, l_max: u32, tol: f64) -> Result<Vec<f64>> {
    let n = grid.n_points();
    let cells = n - 1;
    let n_max = cells * (l_max as usize + 3);
    let table = lattice_density(p, grid.spacing(), n_max, tol)?;
    let lm = l_max as i64;
    let c = cells as i64;
    Ok(par::map_range(n * n, |idx| {
        let (i, j) = (idx / n, idx % n);
        if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
            return 0.0;
        }
        let (i, j) = (i as i64, j as i64);
        let mut acc = 0.0;
        for w in -lm..=lm {
            acc += table.at(i - j + w * c) - table.at(i + j - c + w * c);
        }
        acc
    }))
}

fn weighted_product(a: &[f64], b: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = weights.len();
    let rows = par::map_range(n, |i| {
        let mut row = vec![0.0; n];
        for k in 0..n {
            let aik = a[i * n + k] * weights[k];
            if aik != 0.0 {
                for (r, bkj) in row.iter_mut().zip(&b[k * n..(k + 1) * n]) {
                    *r += aik * bkj;
                }
            }
        }
        row
    });
    rows.into_iter().flatten().collect()
}

/// [`compose_box_kernel_with`] at [`DIFFUSION_WINDINGS`] and density tolerance `1e-10`.
pub fn compose_box_kernel(
    n_steps: u32,
    t: f64,
    alpha: f64,
    k_coeff: f64,
    grid: &Grid,
) -> Result<ComposedKernel> {
    compose_box_kernel_with(n_steps, t, alpha, k_coeff, grid, DIFFUSION_WINDINGS, 1e-10)
}

/// Composes the `t / n_steps` box kernel `n_steps` times with half the
/// trapezoid weights and compares with the kernel built at `t`.
pub fn compose_box_kernel_with(
    n_steps: u32,
    t: f64,
    alpha: f64,
    k_coeff: f64,
    grid: &Grid,
    l_max: u32,
    tol: f64,
) -> Result<ComposedKernel> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be >= 1"));
    }
    let full = StableKernelParams::new(alpha, k_coeff, t)?;
    let step = StableKernelParams::new(alpha, k_coeff, t / n_steps as f64)?;
    let n = grid.n_points();
    let single = box_kernel(&step, grid, l_max, tol)?;
    let direct = if n_steps == 1 {
        single.clone()
    } else {
        box_kernel(&full, grid, l_max, tol)?
    };
    // The kernel is odd in each argument, so the product integrand is even
    // and the full-cell trapezoid sum counts the half cell twice.
    let weights: Vec<f64> = grid.trapezoid_weights().iter().map(|w| 0.5 * w).collect();
    let mut composed = single.clone();
    for _ in 1..n_steps {
        composed = weighted_product(&composed, &single, &weights);
    }
    let residual = composed
        .iter()
        .zip(&direct)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let reach = (2 * l_max as usize) as f64 * grid.half_width();
    let leak = tail_mass(reach, &step);
    let mut warnings = Vec::new();
    if leak > LEAK_TOL {
        let msg = format!("compose_box_kernel: single-step mass {leak:.3e} beyond {l_max} windings");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let mut min_same_side = f64::INFINITY;
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            if grid.node(i) * grid.node(j) >= 0.0 {
                min_same_side = min_same_side.min(composed[i * n + j]);
            }
        }
    }
    Ok(ComposedKernel {
        n_points: n,
        composed,
        direct,
        residual,
        leak,
        min_same_side,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn local() -> BoxParams {
        BoxParams::new(2.0, 0.5, 1.0, 1.0).unwrap()
    }

    #[test]
    fn free_kernel_matches_gaussian_fresnel_form() {
        let p = local();
        let (t, eta) = (0.7, 0.02);
        let rule = FreeKernelRule::new(&p, t, eta, 12.0).unwrap();
        let s = Complex64::new(eta, 0.5 * t);
        for x in [0.0, 0.4, 3.3, 11.9] {
            let exact = (-x * x / (4.0 * s)).exp() / (4.0 * PI * s).sqrt();
            assert!((rule.eval(x) - exact).norm() < 1e-11, "x = {x}");
        }
        let lat = rule.lattice(0.05, 240);
        for n in [0usize, 1, 63, 64, 65, 239, 240] {
            assert!((lat[n] - rule.eval(n as f64 * 0.05)).norm() < 1e-11);
        }
    }

    #[test]
    fn extrapolation_is_exact_for_quadratics() {
        let etas = [1e-2, 1e-3, 1e-4];
        let f = |e: f64| Complex64::new(1.0 + 3.0 * e - 40.0 * e * e, -2.0 + e);
        let ex = extrapolate_eta(&etas, &[f(etas[0]), f(etas[1]), f(etas[2])], 0.0);
        assert!((ex.value - f(0.0)).norm() < 1e-14);
        assert!((ex.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_green_vanishes_at_walls() {
        let p = BoxParams::new(1.5, 1.0, 1.0, 1.0).unwrap();
        for sector in [Sector::Odd, Sector::Even, Sector::Both] {
            let g = green_spectral(1.0, 0.3, 0.4, &p, 50, sector).unwrap();
            assert_eq!(g.value.norm(), 0.0);
            let g = green_spectral(-1.0, 0.3, 0.4, &p, 50, sector).unwrap();
            assert_eq!(g.value.norm(), 0.0);
        }
    }

    #[test]
    fn image_input_checks() {
        let p = BoxParams::new(1.5, 1.0, 1.0, 1.0).unwrap();
        assert!(green_images_regularized(0.1, 0.2, 0.5, &p, 5, 1e-3).is_err());
        assert!(green_images_regularized(0.1, 0.2, 0.5, &p, 10, 0.0).is_err());
        assert!(green_images_regularized(1.1, 0.2, 0.5, &p, 10, 1e-3).is_err());
        assert!(green_box_alpha2(0.1, 0.2, 0.5, &p, 10).is_err());
    }
}
