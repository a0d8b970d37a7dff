//! Symmetric stable densities `p(x) = (1/2pi) int exp(ikx - K t |k|^alpha) dk`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::par;
use crate::params::{positive, Grid};

/// Default absolute accuracy of [`stable_density`].
pub const DENSITY_ABS_TOL: f64 = 1e-12;

/// Upper limit on Fourier terms per evaluation.
const MAX_TERMS: f64 = 2e8;

/// `tau k_max^alpha` at the momentum cutoff.
const DECAY_EXPONENT: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableKernelParams {
    pub alpha: f64,
    pub k_coeff: f64,
    pub t: f64,
}

impl StableKernelParams {
    pub fn new(alpha: f64, k_coeff: f64, t: f64) -> Result<Self> {
        let p = StableKernelParams { alpha, k_coeff, t };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::invalid("alpha", format!("{} is outside (0, 2]", self.alpha)));
        }
        positive("k_coeff", self.k_coeff)?;
        positive("t", self.t)
    }

    /// `K t`.
    pub fn tau(&self) -> f64 {
        self.k_coeff * self.t
    }

    /// Width scale `(K t)^(1/alpha)`.
    pub fn scale(&self) -> f64 {
        self.tau().powf(1.0 / self.alpha)
    }

    fn with_t(&self, t: f64) -> Self {
        StableKernelParams { t, ..*self }
    }
}

/// Coefficient `c` of the power-law tail `p(x) ~ c K t |x|^(-1-alpha)`; zero at `alpha = 2`.
pub fn tail_coefficient(alpha: f64) -> f64 {
    if alpha >= 2.0 {
        0.0
    } else {
        libm::tgamma(1.0 + alpha) * (PI * alpha / 2.0).sin() / PI
    }
}

/// Estimate of the mass `P(|X| > r)`.
pub fn tail_mass(r: f64, p: &StableKernelParams) -> f64 {
    let tau = p.tau();
    if p.alpha == 2.0 {
        libm::erfc(r / (2.0 * tau.sqrt()))
    } else {
        (2.0 * tail_coefficient(p.alpha) * tau / (p.alpha * r.powf(p.alpha))).min(1.0)
    }
}

/// Distance to the nearest periodic image that keeps the summed image
/// contributions below `tol`.
fn image_distance(p: &StableKernelParams, tol: f64) -> f64 {
    let tau = p.tau();
    let scale = p.scale();
    if p.alpha == 2.0 {
        let norm = 1.0 / (4.0 * PI * tau).sqrt();
        let d = (4.0 * tau * (4.0 * norm / tol).max(1.0).ln()).sqrt();
        d.max(2.0 * scale)
    } else {
        let c = tail_coefficient(p.alpha);
        let power = (4.0 * c * tau * (1.0 + 1.0 / p.alpha) / tol).powf(1.0 / (1.0 + p.alpha));
        power.max(40.0 * scale)
    }
}

fn image_bound(p: &StableKernelParams, d: f64) -> f64 {
    let tau = p.tau();
    if p.alpha == 2.0 {
        4.0 * (-d * d / (4.0 * tau)).exp() / (4.0 * PI * tau).sqrt()
    } else {
        4.0 * tail_coefficient(p.alpha) * tau * (1.0 + 1.0 / p.alpha) * d.powf(-1.0 - p.alpha)
    }
}

/// `(1/pi) int_K^inf exp(-tau k^alpha) dk` with a factor-2 margin.
fn momentum_tail_bound(p: &StableKernelParams, k: f64) -> f64 {
    let tau = p.tau();
    let s = tau * k.powf(p.alpha);
    2.0 * (-s).exp() * k / (PI * p.alpha * s) * (1.0 + (1.0 / p.alpha - 1.0).max(0.0) / s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityValue {
    pub value: f64,
    pub error_bound: f64,
}

/// Stable density to [`DENSITY_ABS_TOL`].
pub fn stable_density(x: f64, p: &StableKernelParams) -> Result<f64> {
    Ok(stable_density_with_tol(x, p, DENSITY_ABS_TOL)?.value)
}

/// Trapezoid Fourier inversion with spacing `2 pi / P`; the period `P` puts
/// every image of `x` far enough away for the aliasing sum to stay below `tol`.
pub fn stable_density_with_tol(x: f64, p: &StableKernelParams, tol: f64) -> Result<DensityValue> {
    p.validate()?;
    if !x.is_finite() {
        return Err(Error::invalid("x", "must be finite"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid("tol", format!("{tol} is outside (0, 1)")));
    }
    let tau = p.tau();
    let d = image_distance(p, tol);
    let k_max = (DECAY_EXPONENT / tau).powf(1.0 / p.alpha);
    let period = x.abs() + d;
    let dk = 2.0 * PI / period;
    let terms = (k_max / dk).ceil();
    if terms > MAX_TERMS {
        let window = (MAX_TERMS * 2.0 * PI / k_max - d).max(0.0);
        return Err(Error::OutsideReliableWindow { x, window });
    }
    let terms = terms as usize;
    // Neumaier summation: the partial sums grow like the period
    let (mut acc, mut comp, mut abs_sum) = (0.5, 0.0, 0.5);
    for j in 1..=terms {
        let k = j as f64 * dk;
        let term = (-tau * k.powf(p.alpha)).exp() * (k * x).cos();
        let next = acc + term;
        comp += if acc.abs() >= term.abs() {
            (acc - next) + term
        } else {
            (term - next) + acc
        };
        acc = next;
        abs_sum += term.abs();
    }
    let value = (acc + comp) * dk / PI;
    let rounding = 4.0 * f64::EPSILON * (1.0 + k_max * x.abs()) * abs_sum * dk / PI;
    Ok(DensityValue {
        value: value.max(0.0),
        error_bound: image_bound(p, d) + momentum_tail_bound(p, k_max) + rounding,
    })
}

/// Band-limited periodization `(1/(n h)) sum_{|j| < n/2} exp(-tau k_j^alpha + i k_j x)`,
/// `k_j = 2 pi j / (n h)`, at `x = offset + i h` for `i = 0..n`.
pub fn periodic_density(alpha: f64, tau: f64, n: usize, h: f64, offset: f64) -> Vec<f64> {
    let period = n as f64 * h;
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    let half = (n - 1) / 2;
    for j in 0..=half {
        let k = 2.0 * PI * j as f64 / period;
        let c = Complex64::from_polar((-tau * k.powf(alpha)).exp(), k * offset);
        spectrum[j] = c;
        if j > 0 {
            spectrum[n - j] = c.conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    spectrum.iter().map(|c| c.re / period).collect()
}

/// Samples `p(n h)` for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDensity {
    pub spacing: f64,
    pub values: Vec<f64>,
    pub error_bound: f64,
}

impl LatticeDensity {
    /// `p(n h)` for any integer `n` with `|n| <= n_max`.
    pub fn at(&self, n: i64) -> f64 {
        self.values[n.unsigned_abs() as usize]
    }
}

/// Lattice samples from one FFT of the periodized density, refined until
/// the band limit and the images both fall below `tol`. The Gaussian and
/// Cauchy families use their closed forms.
pub fn lattice_density(
    p: &StableKernelParams,
    h: f64,
    n_max: usize,
    tol: f64,
) -> Result<LatticeDensity> {
    p.validate()?;
    positive("h", h)?;
    let tau = p.tau();
    if p.alpha == 2.0 || p.alpha == 1.0 {
        let values = (0..=n_max)
            .map(|n| {
                let x = n as f64 * h;
                if p.alpha == 2.0 {
                    (-x * x / (4.0 * tau)).exp() / (4.0 * PI * tau).sqrt()
                } else {
                    tau / (PI * (tau * tau + x * x))
                }
            })
            .collect();
        return Ok(LatticeDensity {
            spacing: h,
            values,
            error_bound: 4.0 * f64::EPSILON,
        });
    }
    let mut refine = 1usize;
    while momentum_tail_bound(p, PI * refine as f64 / h) > tol {
        refine *= 2;
        if refine > 1 << 16 {
            return Err(Error::tolerance("lattice_density", "lattice too coarse for the kernel width"));
        }
    }
    let hf = h / refine as f64;
    let d = image_distance(p, tol);
    let reach = n_max as f64 * h + d;
    let n = ((2.0 * reach / hf).ceil() as usize).next_power_of_two();
    if n as f64 > MAX_TERMS {
        return Err(Error::OutsideReliableWindow {
            x: n_max as f64 * h,
            window: (MAX_TERMS * hf / 2.0 - d).max(0.0),
        });
    }
    let fine = periodic_density(p.alpha, tau, n, hf, 0.0);
    let values = (0..=n_max).map(|i| fine[i * refine]).collect();
    Ok(LatticeDensity {
        spacing: h,
        values,
        error_bound: image_bound(p, d) + momentum_tail_bound(p, PI / hf) + 16.0 * f64::EPSILON,
    })
}

/// Direct circular convolution `c_i = h sum_j a_{(i-j) mod n} b_j`.
pub fn circular_convolution(a: &[f64], b: &[f64], h: f64) -> Result<Vec<f64>> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::GridMismatch(format!(
            "convolution of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    Ok(par::map_range(n, |i| {
        let mut acc = 0.0;
        for (j, bj) in b.iter().enumerate() {
            let k = if i >= j { i - j } else { i + n - j };
            acc += a[k] * bj;
        }
        acc * h
    }))
}

/// `h sum_i |p_t(x_i) - (p_{t/2} * p_{t/2})(x_i)|` with `K = 1`. The window
/// nodes form one period of a periodic cell of length `n h`; the densities
/// are the band-limited periodizations on that cell.
pub fn chapman_kolmogorov_residual(alpha: f64, t: f64, window: &Grid) -> Result<f64> {
    let p = StableKernelParams::new(alpha, 1.0, t)?;
    let n = window.n_points();
    let h = window.spacing();
    let x0 = window.node(0);
    let half = p.with_t(t / 2.0);
    let f = periodic_density(alpha, half.tau(), n, h, x0);
    let kernel = periodic_density(alpha, half.tau(), n, h, 0.0);
    let full = periodic_density(alpha, p.tau(), n, h, x0);
    let conv = circular_convolution(&kernel, &f, h)?;
    Ok(h * full.iter().zip(&conv).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_families_at_origin() {
        let g = StableKernelParams::new(2.0, 1.0, 1.0).unwrap();
        let c = StableKernelParams::new(1.0, 1.0, 1.0).unwrap();
        let pg = stable_density(0.0, &g).unwrap();
        let pc = stable_density(0.0, &c).unwrap();
        assert!((pg - 0.5 / PI.sqrt()).abs() < 1e-12);
        assert!((pc - 1.0 / PI).abs() < 1e-11);
        let x = 3.7;
        let pc = stable_density(x, &c).unwrap();
        assert!((pc - 1.0 / (PI * (1.0 + x * x))).abs() < 1e-11);
    }

    #[test]
    fn periodic_density_sums_to_one() {
        let v = periodic_density(1.5, 0.3, 256, 0.1, -12.8);
        let s: f64 = v.iter().sum::<f64>() * 0.1;
        assert!((s - 1.0).abs() < 1e-13);
    }

    #[test]
    fn lattice_matches_pointwise_inversion() {
        let p = StableKernelParams::new(1.5, 1.0, 0.2).unwrap();
        let lat = lattice_density(&p, 0.05, 200, 1e-10).unwrap();
        for n in [0i64, 3, 17, 120, 200] {
            let v = stable_density(n as f64 * 0.05, &p).unwrap();
            assert!((lat.at(n) - v).abs() < 2e-10, "n = {n}");
            assert_eq!(lat.at(n), lat.at(-n));
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(StableKernelParams::new(0.0, 1.0, 1.0).is_err());
        assert!(StableKernelParams::new(2.1, 1.0, 1.0).is_err());
        assert!(StableKernelParams::new(1.5, 1.0, 0.0).is_err());
        let p = StableKernelParams::new(1.5, 1.0, 1.0).unwrap();
        assert!(matches!(
            stable_density(1e12, &p),
            Err(Error::OutsideReliableWindow { .. })
        ));
    }
}
