//! Gauss-Legendre panels and the asymptotic tail of algebraically decaying
//! Fourier integrals.

use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<T>(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> T) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
    {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        let mut acc = T::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(c + r * x) * (w * r);
        }
        acc
    }

    /// Appends the mapped nodes and weights of this rule on `[a, b]`.
    pub fn push_panel(&self, a: f64, b: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            nodes.push(c + r * x);
            weights.push(w * r);
        }
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

pub(crate) fn gl10() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(10))
}

pub(crate) fn gl16() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(16))
}

pub(crate) fn gl20() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(20))
}

/// Breakpoints `0 < b_0 < ... < b_levels = w` refined geometrically toward
/// zero, for integrands with an algebraic singularity at the origin. The
/// panel `[0, b_0]` is returned as the first interval.
pub(crate) fn graded_breaks(w: f64, levels: usize) -> Vec<f64> {
    let mut b: Vec<f64> = (0..=levels).map(|j| w * 0.5f64.powi((levels - j) as i32)).collect();
    b.insert(0, 0.0);
    b
}

/// Integrand weight `q(k) = k^power / (k^2 - z^2)` for `k > z`, expanded as
/// `sum_p z^{2p} k^{power - 2 - 2p}`; used for tails of the appendix integrals.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PowerOverQuadratic {
    pub power: f64,
    pub z: f64,
}

impl PowerOverQuadratic {
    /// `j`-th derivative at `k` (requires `k > 2 z`).
    pub fn derivative(&self, j: usize, k: f64) -> f64 {
        let mut total = 0.0;
        let mut zp = 1.0;
        for p in 0..200 {
            let a = self.power - 2.0 - 2.0 * p as f64;
            let mut fall = 1.0;
            for i in 0..j {
                fall *= a - i as f64;
            }
            let term = zp * fall * k.powf(a - j as f64);
            total += term;
            if p > 0 && term.abs() <= 1e-18 * total.abs() {
                break;
            }
            zp *= self.z * self.z;
        }
        total
    }
}

/// Asymptotic value of `int_K^inf q(k) e^{i omega k} dk` for a smooth,
/// algebraically decaying `q` with single-signed derivatives, by repeated
/// integration by parts. Returns `(value, remainder_bound)`.
pub(crate) fn fourier_tail(
    q: &PowerOverQuadratic,
    k_cut: f64,
    omega: f64,
    terms: usize,
) -> (num_complex::Complex64, f64) {
    use num_complex::Complex64;
    assert!(omega > 0.0);
    let phase = Complex64::from_polar(1.0, omega * k_cut);
    let i_omega = Complex64::new(0.0, omega);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut denom = i_omega;
    for j in 0..terms {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sum += q.derivative(j, k_cut) * sign / denom;
        denom *= i_omega;
    }
    let bound = q.derivative(terms - 1, k_cut).abs() / omega.powi(terms as i32);
    (-phase * sum, bound)
}
