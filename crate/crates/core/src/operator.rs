//! Finite-interval fractional Laplace operator and the momentum-space
//! integrals that certify its sine eigenpairs.
//!
//! For `1 < alpha < 2` the operator acts as
//!
//! ```text
//! L psi(x) = C_alpha * d^2/dx^2  int_{-L}^{L} |x - y|^{1 - alpha} psi(y) dy,
//! C_alpha  = hbar^alpha D / (2 Gamma(2 - alpha) cos(alpha pi / 2)),
//! ```
//!
//! and at `alpha = 2` it is the local kinetic operator `-hbar^2 D psi''`.
//! The weakly singular integral is evaluated by product integration against
//! the piecewise-linear interpolant of `psi`, so the kernel singularity is
//! integrated exactly cell by cell.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;
use crate::params::{BoxParams, Grid, GridFunction, QuadratureSpec};
use crate::quadrature::{fourier_tail, gl10, gl20, graded_breaks, PowerOverQuadratic};

/// Relative change under 2x refinement above which the real-space operator
/// emits a convergence warning.
pub const SENTINEL_REL_TOL: f64 = 1e-3;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `C_alpha = hbar^alpha D / (2 Gamma(2 - alpha) cos(alpha pi / 2))`.
///
/// Negative on `(1, 2)`. Rejects `alpha = 2`, where the Riesz form degenerates.
pub fn riesz_prefactor(params: &BoxParams) -> Result<f64> {
    params.validate()?;
    let a = params.alpha;
    if a == 2.0 {
        return Err(Error::LocalBranchRequired);
    }
    let denom = 2.0 * libm::tgamma(2.0 - a) * (a * PI / 2.0).cos();
    Ok(params.hbar.powf(a) * params.d_alpha / denom)
}

/// Exponent of the weakly singular kernel, `|x - y|^{kernel_power}`.
fn kernel_power(params: &BoxParams) -> Result<f64> {
    params.validate()?;
    if params.alpha == 2.0 {
        return Err(Error::invalid("alpha", "the Riesz interval integral needs 1 < alpha < 2"));
    }
    Ok(1.0 - params.alpha)
}

/// Cell moments of `s^beta` against the two linear hat pieces on `[e, e+1]`:
/// `near = int s^beta (e + 1 - s) ds` and `far = int s^beta (s - e) ds`.
fn cell_moments(beta: f64, e: usize) -> (f64, f64) {
    let e_f = e as f64;
    if e >= 8 {
        // (e + t)^beta = e^beta sum_n binom(beta, n) (t / e)^n
        let mut near = 0.0;
        let mut far = 0.0;
        let mut c = 1.0;
        for n in 0..40 {
            let nf = n as f64;
            near += c / ((nf + 1.0) * (nf + 2.0));
            far += c / (nf + 2.0);
            c *= (beta - nf) / ((nf + 1.0) * e_f);
            if c.abs() < 1e-19 {
                break;
            }
        }
        let scale = e_f.powf(beta);
        return (near * scale, far * scale);
    }
    let p0 = beta + 1.0;
    let p1 = beta + 2.0;
    let m0 = ((e_f + 1.0).powf(p0) - e_f.powf(p0)) / p0;
    let m1 = ((e_f + 1.0).powf(p1) - e_f.powf(p1)) / p1;
    ((e_f + 1.0) * m0 - m1, m1 - e_f * m0)
}

/// Product-integration weights for `int_{-L}^{L} |x_i - y|^{1-alpha} f(y) dy`
/// on a uniform grid. The matrix is determined by the cell moments alone.
#[derive(Debug, Clone)]
pub struct RieszWeights {
    n: usize,
    scale: f64,
    near: Vec<f64>,
    far: Vec<f64>,
}

impl RieszWeights {
    pub fn new(grid: &Grid, params: &BoxParams) -> Result<Self> {
        let beta = kernel_power(params)?;
        let n = grid.n_points();
        let (near, far): (Vec<f64>, Vec<f64>) = (0..n - 1).map(|e| cell_moments(beta, e)).unzip();
        Ok(RieszWeights {
            n,
            scale: grid.spacing().powf(beta + 1.0),
            near,
            far,
        })
    }

    /// Weight of node `j` in the integral evaluated at node `i`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let mut w = 0.0;
        // cell [j, j+1]
        if j + 1 < self.n {
            w += if j >= i { self.near[j - i] } else { self.far[i - j - 1] };
        }
        // cell [j-1, j]
        if j >= 1 {
            w += if j > i { self.far[j - 1 - i] } else { self.near[i - j] };
        }
        w * self.scale
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|j| self.weight(i, j)).collect()
    }

    /// The integral at node `i`.
    pub fn apply_at(&self, values: &[Complex64], i: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, v) in values.iter().enumerate() {
            acc += v * self.weight(i, j);
        }
        acc
    }
}

/// `I(x_i) = int_{-L}^{L} |x_i - y|^{1-alpha} f(y) dy` at every node.
pub fn riesz_interval_integral(f: &GridFunction, params: &BoxParams) -> Result<GridFunction> {
    let grid = *f.grid();
    let w = RieszWeights::new(&grid, params)?;
    let values = f.values();
    let out = par::map_range(grid.n_points(), |i| w.apply_at(values, i));
    GridFunction::new(grid, out)
}

/// Result of the real-space operator.
#[derive(Debug, Clone)]
pub struct OperatorOutput {
    /// Operator values at every node; the two endpoint entries come from
    /// one-sided stencils and are excluded from accuracy claims.
    pub values: GridFunction,
    pub endpoint_values: (Complex64, Complex64),
    /// Max relative change at shared interior nodes against the 2x coarser
    /// grid, when the grid can be coarsened.
    pub sentinel_change: Option<f64>,
    pub warnings: Vec<String>,
}

impl OperatorOutput {
    pub fn interior(&self) -> &[Complex64] {
        let v = self.values.values();
        &v[1..v.len() - 1]
    }
}

/// Applies the finite-interval fractional Laplacian to a box wavefunction.
pub fn apply_operator_realspace(psi: &GridFunction, params: &BoxParams) -> Result<OperatorOutput> {
    params.validate()?;
    let grid = *psi.grid();
    if !grid.matches(params.half_width) {
        return Err(Error::GridMismatch(format!(
            "grid half-width {} but L = {}",
            grid.half_width(),
            params.half_width
        )));
    }
    if grid.spacing() >= params.half_width / 8.0 {
        return Err(Error::invalid(
            "grid.n_points",
            format!("spacing {} must be < L/8", grid.spacing()),
        ));
    }
    psi.check_box_boundary()?;

    let values = apply_core(psi, params)?;
    let n = values.len();
    let endpoint_values = (values[0], values[n - 1]);

    let mut warnings = Vec::new();
    let sentinel_change = match grid.coarsened() {
        Some(coarse) if coarse.spacing() < params.half_width / 8.0 => {
            let coarse_psi = GridFunction::new(
                coarse,
                psi.values().iter().step_by(2).copied().collect(),
            )?;
            let coarse_vals = apply_core(&coarse_psi, params)?;
            let scale = values[1..n - 1].iter().map(|v| v.norm()).fold(0.0, f64::max);
            let change = (1..coarse_vals.len() - 1)
                .map(|i| (values[2 * i] - coarse_vals[i]).norm())
                .fold(0.0, f64::max);
            Some(if scale > 0.0 { change / scale } else { change })
        }
        _ => None,
    };
    if let Some(c) = sentinel_change {
        if c > SENTINEL_REL_TOL {
            let msg = format!("apply_operator_realspace: change under 2x refinement is {c:.3e}");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    Ok(OperatorOutput {
        values: GridFunction::new(grid, values)?,
        endpoint_values,
        sentinel_change,
        warnings,
    })
}

fn apply_core(psi: &GridFunction, params: &BoxParams) -> Result<Vec<Complex64>> {
    let h = psi.grid().spacing();
    if params.is_local() {
        let c = -params.hbar * params.hbar * params.d_alpha;
        Ok(second_difference(psi.values(), h).into_iter().map(|v| v * c).collect())
    } else {
        let c = riesz_prefactor(params)?;
        let integral = riesz_interval_integral(psi, params)?;
        Ok(second_difference(integral.values(), h)
            .into_iter()
            .map(|v| v * c)
            .collect())
    }
}

/// Central second difference at interior nodes, four-point one-sided
/// stencils at the ends.
fn second_difference(v: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = v.len();
    let h2 = h * h;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - v[i] * 2.0 + v[i - 1]) / h2;
    }
    if n >= 4 {
        out[0] = (v[0] * 2.0 - v[1] * 5.0 + v[2] * 4.0 - v[3]) / h2;
        out[n - 1] = (v[n - 1] * 2.0 - v[n - 2] * 5.0 + v[n - 3] * 4.0 - v[n - 4]) / h2;
    } else {
        out[0] = out[1];
        out[n - 1] = out[n - 2];
    }
    out
}

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-3 {
        let u2 = u * u;
        1.0 - u2 / 6.0 * (1.0 - u2 / 20.0)
    } else {
        u.sin() / u
    }
}

fn mode_wavenumber(m: u32, params: &BoxParams) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("m", "mode index must be >= 1"));
    }
    params.validate()?;
    Ok(m as f64 * PI / params.half_width)
}

/// `int_{-L}^{L} e^{iky} sin(m pi y / L) dy`, the y-integral of the odd mode.
///
/// Written as `i L [sinc((k - z) L) - sinc((k + z) L)]` with `z = m pi / L`,
/// so the removable poles at `k = +-z` never divide by zero. The limit at
/// `k = z` is `i L`.
pub fn appendix_y_integral(m: u32, k: f64, params: &BoxParams) -> Result<Complex64> {
    let z = mode_wavenumber(m, params)?;
    if !k.is_finite() {
        return Err(Error::invalid("k", "must be finite"));
    }
    let l = params.half_width;
    Ok(I * (l * (sinc((k - z) * l) - sinc((k + z) * l))))
}

/// A momentum integral with its error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppendixIntegral {
    pub value: Complex64,
    /// Quadrature estimate plus the remainder bound of the asymptotic tail.
    pub error_budget: f64,
    pub quadrature_error: f64,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Profile {
    Value,
    Derivative,
}

/// `(1/2pi) int k|k|^{alpha-2} / ((k+z)(k-z)) [e^{ik(L-x)} - e^{-ik(L+x)}] dk`
/// with `z = m pi / L`.
///
/// Folded onto the half line it reads
/// `(2i/pi) int_0^inf k^{alpha-1} sin(kL) cos(kx) / (k^2 - z^2) dk`.
/// The integral is truncated at `quad.k_cutoff`; the remaining oscillatory
/// tail is added from its integration-by-parts expansion and the remainder
/// bound of that expansion enters the error budget.
pub fn appendix_k_integral(
    m: u32,
    x: f64,
    params: &BoxParams,
    quad: &QuadratureSpec,
) -> Result<AppendixIntegral> {
    momentum_profile(m, x, params, quad, Profile::Value)
}

/// Closed form from closing the contour around the poles `k = +-z` only:
/// `i (-1)^m (m pi / L)^{alpha - 2} cos(m pi x / L)`.
pub fn residue_formula(m: u32, x: f64, params: &BoxParams) -> Result<Complex64> {
    let z = mode_wavenumber(m, params)?;
    Ok(I * (parity_sign(m) * z.powf(params.alpha - 2.0) * (z * x).cos()))
}

/// Contribution of the branch cut of `k |k|^{alpha-2}` along the imaginary
/// axis, which the pole residues omit:
/// `-(i/pi) sin(pi (2 - alpha) / 2) [J(L - x) + J(L + x)]` with
/// `J(a) = int_0^inf s^{alpha-1} e^{-s a} / (s^2 + z^2) ds`.
/// Vanishes identically at `alpha = 2`.
pub fn branch_cut_term(m: u32, x: f64, params: &BoxParams) -> Result<Complex64> {
    let z = mode_wavenumber(m, params)?;
    let l = params.half_width;
    if x.abs() > l {
        return Err(Error::invalid("x", format!("{x} outside [-L, L]")));
    }
    let a = params.alpha;
    let s = (PI * (2.0 - a) / 2.0).sin();
    if s == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let j = |d: f64| laplace_weight(a - 1.0, d.max(0.0) * z) * z.powf(a - 2.0);
    Ok(-I * (s / PI * (j(l - x) + j(l + x))))
}

/// Exact value of [`appendix_k_integral`]: residue plus branch-cut parts.
pub fn appendix_k_integral_exact(m: u32, x: f64, params: &BoxParams) -> Result<Complex64> {
    Ok(residue_formula(m, x, params)? + branch_cut_term(m, x, params)?)
}

/// `int_0^inf s^p e^{-b s} / (1 + s^2) ds` for `-1 < p < 2` and `b >= 0`
/// (`p < 1` when `b = 0`).
fn laplace_weight(p: f64, b: f64) -> f64 {
    if b == 0.0 {
        debug_assert!(p < 1.0);
        return PI / (2.0 * (PI * p / 2.0).cos());
    }
    let gl = gl20();
    let breaks = graded_breaks(1.0, 60);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        // [0, 1] directly, [1, inf) through s = 1/u
        total += gl.integrate(w[0], w[1], |s| s.powf(p) * (-b * s).exp() / (1.0 + s * s));
        total += gl.integrate(w[0], w[1], |u| {
            if u == 0.0 {
                0.0
            } else {
                u.powf(-p) * (-b / u).exp() / (1.0 + u * u)
            }
        });
    }
    total
}

fn parity_sign(m: u32) -> f64 {
    if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Half-line quadrature of the appendix integrand (`Value`) or its
/// x-derivative (`Derivative`), returning the full complex result.
fn momentum_profile(
    m: u32,
    x: f64,
    params: &BoxParams,
    quad: &QuadratureSpec,
    profile: Profile,
) -> Result<AppendixIntegral> {
    quad.validate()?;
    let z = mode_wavenumber(m, params)?;
    let l = params.half_width;
    let a = params.alpha;
    if !(x.is_finite() && x.abs() <= l) {
        return Err(Error::invalid("x", format!("{x} outside [-L, L]")));
    }
    let k_cut = quad.k_cutoff;
    if k_cut < 4.0 * z {
        return Err(Error::invalid(
            "k_cutoff",
            format!("{k_cut} must exceed 4 m pi / L = {}", 4.0 * z),
        ));
    }
    let sign_m = parity_sign(m);
    // sin(kL) / (k^2 - z^2) with the removable zero at k = z cancelled
    let ratio = move |k: f64| sign_m * l * sinc((k - z) * l) / (k + z);
    let (power, integrand): (f64, Box<dyn Fn(f64) -> f64 + Sync>) = match profile {
        Profile::Value => (a - 1.0, Box::new(move |k| k.powf(a - 1.0) * ratio(k) * (k * x).cos())),
        Profile::Derivative => (a, Box::new(move |k| -k.powf(a) * ratio(k) * (k * x).sin())),
    };

    let omega_max = l + x.abs();
    let width = (1.5 / omega_max).min(0.5);
    let n_panels = (k_cut / width).ceil() as usize;
    if n_panels > quad.max_subdivisions {
        return Err(Error::tolerance(
            "appendix_k_integral",
            format!("{n_panels} panels exceed max_subdivisions = {}", quad.max_subdivisions),
        ));
    }
    let mut breaks = graded_breaks(width, 40);
    for j in 2..=n_panels {
        breaks.push((j as f64 * width).min(k_cut));
    }
    breaks.dedup();
    let (hi, lo, abs_sum) = breaks
        .windows(2)
        .map(|w| {
            let hi = gl20().integrate(w[0], w[1], &integrand);
            let lo = gl10().integrate(w[0], w[1], &integrand);
            let abs = gl10().integrate(w[0], w[1], |k| integrand(k).abs());
            (hi, lo, abs)
        })
        .fold((0.0, 0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1, acc.2 + v.2));
    let quadrature_error = (hi - lo).abs() + 64.0 * f64::EPSILON * abs_sum;

    // Tail: products of sin/cos folded into single Fourier modes.
    let q = PowerOverQuadratic { power, z };
    let terms = 6;
    let mut tail = 0.0;
    let mut tail_bound = 0.0;
    let mut add_mode = |omega: f64, weight: f64, take_sin: bool| -> Result<()> {
        if omega == 0.0 {
            if take_sin {
                return Ok(());
            }
            return Err(Error::invalid(
                "x",
                "the derivative integral diverges at the walls",
            ));
        }
        let (t, b) = fourier_tail(&q, k_cut, omega, terms);
        tail += weight * if take_sin { t.im } else { t.re };
        tail_bound += weight.abs() * b;
        Ok(())
    };
    match profile {
        // sin(kL) cos(kx) = [sin(k(L+x)) + sin(k(L-x))] / 2
        Profile::Value => {
            add_mode(l + x, 0.5, true)?;
            add_mode(l - x, 0.5, true)?;
        }
        // -sin(kL) sin(kx) = -[cos(k(L-x)) - cos(k(L+x))] / 2
        Profile::Derivative => {
            add_mode(l - x, -0.5, false)?;
            add_mode(l + x, 0.5, false)?;
        }
    }

    let pref = 2.0 / PI;
    let value = I * (pref * (hi + tail));
    let error_budget = pref * (quadrature_error + tail_bound);
    if error_budget > quad.abs_tol {
        return Err(Error::tolerance(
            "appendix_k_integral",
            format!(
                "error budget {error_budget:.3e} exceeds abs_tol {:.3e} at m={m}, x={x}",
                quad.abs_tol
            ),
        ));
    }
    Ok(AppendixIntegral {
        value,
        error_budget,
        quadrature_error: pref * quadrature_error,
        tail_bound: pref * tail_bound,
    })
}

/// Pointwise eigenvalue estimate at one interior node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeEigenvalue {
    pub x: f64,
    pub energy: f64,
    pub error_budget: f64,
}

/// Per-node eigenvalue profile `E(x) = [L Psi_m](x) / Psi_m(x)` obtained by
/// applying `(-1)^m D hbar^alpha (m pi / L) (i d/dx)` to the momentum
/// integral. The x-derivative is taken under the integral sign, so the
/// profile is computed entirely by quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenProfile {
    pub nodes: Vec<NodeEigenvalue>,
    pub closed_form: f64,
}

impl EigenProfile {
    pub fn mean(&self) -> f64 {
        self.nodes.iter().map(|n| n.energy).sum::<f64>() / self.nodes.len() as f64
    }

    /// `(max - min) / |mean|` over the nodes.
    pub fn relative_spread(&self) -> f64 {
        let (lo, hi) = self
            .nodes
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), n| (lo.min(n.energy), hi.max(n.energy)));
        (hi - lo) / self.mean().abs()
    }

    pub fn max_relative_deviation(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| ((n.energy - self.closed_form) / self.closed_form).abs())
            .fold(0.0, f64::max)
    }
}

/// Interior nodes where `|sin(m pi x / L)|` is bounded away from zero.
fn eigen_nodes(m: u32, l: f64) -> Vec<f64> {
    let z = m as f64 * PI / l;
    (-15..=15)
        .map(|j| l * j as f64 / 16.0)
        .filter(|x| (z * x).sin().abs() >= 0.25)
        .collect()
}

/// Computes the per-node eigenvalue profile for odd mode `m`.
pub fn appendix_eigen_profile(m: u32, params: &BoxParams, quad: &QuadratureSpec) -> Result<EigenProfile> {
    let z = mode_wavenumber(m, params)?;
    let outer = parity_sign(m) * params.d_alpha * params.hbar.powf(params.alpha) * z;
    let xs = eigen_nodes(m, params.half_width);
    let evaluated = par::map_slice(&xs, |&x| momentum_profile(m, x, params, quad, Profile::Derivative));
    let mut nodes = Vec::with_capacity(xs.len());
    for (x, d) in xs.iter().zip(evaluated) {
        let d = d?;
        let s = (z * x).sin();
        // outer * i * A'(x); A' is purely imaginary
        let action = (I * d.value * outer).re;
        nodes.push(NodeEigenvalue {
            x: *x,
            energy: action / s,
            error_budget: (outer * d.error_budget / s).abs(),
        });
    }
    Ok(EigenProfile {
        nodes,
        closed_form: params.d_alpha * (params.hbar * z).powf(params.alpha),
    })
}

/// The eigenvalue recovered by the momentum-space route.
///
/// Fails when the per-node estimates spread by more than `quad.rel_tol`,
/// i.e. when `sin(m pi x / L)` is not reproduced pointwise.
pub fn appendix_eigen_action(m: u32, params: &BoxParams, quad: &QuadratureSpec) -> Result<f64> {
    let profile = appendix_eigen_profile(m, params, quad)?;
    let spread = profile.relative_spread();
    if spread > quad.rel_tol {
        return Err(Error::tolerance(
            "appendix_eigen_action",
            format!(
                "per-node eigenvalue spread {spread:.3e} > rel_tol {:.1e} (m={m}, alpha={}, mean={:.9}, closed form={:.9})",
                quad.rel_tol,
                params.alpha,
                profile.mean(),
                profile.closed_form
            ),
        ));
    }
    Ok(profile.mean())
}

/// Exact per-node eigenvalue profile including the branch-cut part:
/// `E(x) = D hbar^alpha z^alpha + D hbar^alpha (-1)^m z (1/pi) sin(pi(2-alpha)/2)
///  [J'(L + x) - J'(L - x)] / sin(z x)`, for interior `x`.
pub fn appendix_eigen_profile_exact(m: u32, x: f64, params: &BoxParams) -> Result<f64> {
    let z = mode_wavenumber(m, params)?;
    let l = params.half_width;
    if !(x.abs() < l) {
        return Err(Error::invalid("x", "must be strictly inside the well"));
    }
    let a = params.alpha;
    let scale = params.d_alpha * params.hbar.powf(a);
    let s = (PI * (2.0 - a) / 2.0).sin();
    // J'(d) = -z^{alpha-1} int_0^inf s^alpha e^{-d z s} / (1 + s^2) ds
    let jp = |d: f64| -z.powf(a - 1.0) * laplace_weight(a, d * z);
    let corr = parity_sign(m) * z * s / PI * (jp(l + x) - jp(l - x)) / (z * x).sin();
    Ok(scale * (z.powf(a) + corr))
}
