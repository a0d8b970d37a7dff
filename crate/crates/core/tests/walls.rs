use std::f64::consts::{FRAC_PI_2, PI};

use levybox::walls::*;
use levybox::BoxParams;
use num_complex::Complex64;
use proptest::prelude::*;

fn base() -> BoxParams {
    BoxParams::new(1.5, 1.0, 1.0, 1.0).unwrap()
}

fn walls(eps: f64) -> MovingWallParams {
    MovingWallParams::new(eps, 1.0, base()).unwrap()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn local_trace_revives() {
    let p = BoxParams::new(2.0, 0.5, 1.0, 1.0).unwrap();
    let t_rev = 16.0 / PI;
    for t in [0.0, 0.13, 1.7, -2.4] {
        let a = trace_g0(t, &p, 50).unwrap();
        let b = trace_g0(t + t_rev, &p, 50).unwrap();
        // phase arithmetic at |E t| ~ 1e4 keeps about 1e-12 per term
        assert!((a - b).norm() < 1e-9, "t {t}");
    }
}

proptest! {
    #[test]
    fn trace_is_conjugate_under_time_reversal(t in -100f64..100.0, m_max in 1u32..200) {
        let a = trace_g0(t, &base(), m_max).unwrap();
        let b = trace_g0(-t, &base(), m_max).unwrap();
        prop_assert!((a - b.conj()).norm() < 1e-12 * m_max as f64);
        prop_assert!(a.norm() <= m_max as f64 + 1e-9);
    }

    #[test]
    fn exact_branch_is_periodic_and_bounded_by_the_edges(xi in -PI..PI) {
        let w = walls(0.02);
        let band = band_edges(2, 1, &w).unwrap();
        let e = quasienergy(2, 1, xi, &w, Order::Exact).unwrap();
        prop_assert!(e >= band.e_min - 1e-12 && e <= band.e_max + 1e-12);
        let shifted = xi + if xi > 0.0 { -2.0 * PI } else { 2.0 * PI };
        if shifted.abs() <= PI {
            let e2 = quasienergy(2, 1, shifted, &w, Order::Exact).unwrap();
            prop_assert!((e - e2).abs() < 1e-11 * e);
        }
    }
}

#[test]
fn trace_rejects_empty_sum() {
    assert!(trace_g0(1.0, &base(), 0).is_err());
    assert_eq!(trace_g0(0.0, &base(), 7).unwrap(), Complex64::new(7.0, 0.0));
}

#[test]
fn static_density_peaks_sit_on_the_odd_levels() {
    let e = linspace(0.0, 20.0, 20001);
    let d = dos_static(&e, &base(), 0.05).unwrap();
    assert!(d.warnings.is_empty());
    let peak = |lo: f64, hi: f64| {
        let (i, _) = d
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| e[*i] > lo && e[*i] < hi)
            .fold((0, -1.0), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
        e[i]
    };
    assert!((peak(4.0, 8.0) - PI.powf(1.5)).abs() < 1e-3);
    assert!((peak(13.0, 18.0) - (2.0 * PI).powf(1.5)).abs() < 1e-3);
}

#[test]
fn static_density_counts_levels() {
    let e = linspace(0.0, 50.0, 50001);
    let d = dos_static(&e, &base(), 0.05).unwrap();
    let h = e[1] - e[0];
    let mass: f64 = d.values.windows(2).map(|w| 0.5 * (w[0] + w[1]) * h).sum();
    // levels pi^1.5 m^1.5 below 50: m = 1..=4
    assert!((mass - 4.0).abs() < 1e-6, "{mass}");
    let local = BoxParams::new(2.0, 0.5, 1.0, 1.0).unwrap();
    let dl = dos_static(&linspace(0.0, 10.0, 10001), &local, 0.02).unwrap();
    let i = dl.values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!((i as f64 * 1e-3 - PI * PI / 2.0).abs() < 1e-3);
}

#[test]
fn coarse_energy_grid_triggers_a_warning() {
    let d = dos_static(&linspace(0.0, 20.0, 41), &base(), 0.1).unwrap();
    assert_eq!(d.warnings.len(), 1);
    assert!(dos_static(&[1.0, 0.5], &base(), 0.1).is_err());
    assert!(dos_static(&[0.0, 1.0], &base(), 0.0).is_err());
}

#[test]
fn quarter_period_branches() {
    let w = walls(0.01);
    let exact = quasienergy(1, 0, FRAC_PI_2, &w, Order::Exact).unwrap();
    let first = quasienergy(1, 0, FRAC_PI_2, &w, Order::First).unwrap();
    assert!((exact - 5.48584).abs() < 1e-5, "{exact}");
    assert!((first - 5.48481).abs() < 1e-5, "{first}");
    let still = MovingWallParams::new(0.0, 1.0, base()).unwrap();
    for m in 1..4 {
        let e = quasienergy(m, 0, 0.7, &still, Order::Exact).unwrap();
        assert!((e - (PI * m as f64).powf(1.5)).abs() < 1e-12 * e);
        let band = band_edges(m, 0, &still).unwrap();
        assert_eq!(band.e_min, band.e_max);
    }
}

fn branch_gap(eps: f64) -> f64 {
    let w = walls(eps);
    linspace(-PI, PI, 65)
        .into_iter()
        .map(|xi| {
            (quasienergy(1, 0, xi, &w, Order::Exact).unwrap() - quasienergy(1, 0, xi, &w, Order::First).unwrap()).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn branches_differ_at_second_order() {
    for eps in [0.02, 0.01, 0.005] {
        let ratio = branch_gap(eps) / branch_gap(eps / 2.0);
        assert!((3.5..=4.5).contains(&ratio), "eps {eps}: {ratio}");
    }
}

#[test]
fn band_width_and_centre() {
    let w = walls(0.01);
    let band = band_edges(1, 0, &w).unwrap();
    assert!((band.half_width_first_order - 0.083525).abs() < 1e-6);
    let width = band.e_max - band.e_min;
    let rel = (width - 2.0 * band.half_width_first_order).abs() / width;
    assert!(rel < 0.02, "{rel}");
    assert!(band.e_min <= band.center && band.center <= band.e_max);
    let centre_shift = |eps: f64| (band_edges(1, 0, &walls(eps)).unwrap().center - PI.powf(1.5)).abs();
    let ratio = centre_shift(0.02) / centre_shift(0.01);
    assert!((3.5..=4.5).contains(&ratio));
    for xi in linspace(-PI, PI, 401) {
        let e = quasienergy(1, 0, xi, &w, Order::Exact).unwrap();
        assert!(e >= band.e_min && e <= band.e_max);
    }
}

#[test]
fn sidebands_translate_rigidly() {
    let w = MovingWallParams::new(0.03, 2.5, base()).unwrap();
    let a = band_edges(2, -1, &w).unwrap();
    let b = band_edges(2, 0, &w).unwrap();
    assert!((b.e_min - a.e_min - 2.5).abs() < 1e-12);
    assert!((b.e_max - a.e_max - 2.5).abs() < 1e-12);
}

#[test]
fn band_density_has_unit_mass_per_band_and_stays_in_its_edges() {
    let w = MovingWallParams::new(0.01, 3.0, base()).unwrap();
    let e = linspace(-5.0, 25.0, 3001);
    let h = e[1] - e[0];
    let d = dos_bands(&e, &w, (-1, 1), 2, 4096).unwrap();
    let mass: f64 = d.values.iter().sum::<f64>() * h;
    assert!((mass - 6.0).abs() < 1e-6, "{mass}");
    let band = band_edges(1, 0, &w).unwrap();
    let lo = band.e_min - h;
    let hi = band.e_max + h;
    // band (1, 0) alone in [4, 7]
    for (i, v) in d.values.iter().enumerate() {
        if e[i] > 4.0 && e[i] < 7.0 && *v > 0.0 {
            assert!(e[i] >= lo && e[i] <= hi, "mass at {}", e[i]);
        }
    }
}

#[test]
fn vanishing_amplitude_collapses_bands_onto_the_comb() {
    let w = MovingWallParams::new(1e-9, 2.0, base()).unwrap();
    let e = linspace(0.0, 20.0, 2001);
    let h = e[1] - e[0];
    let d = dos_bands(&e, &w, (0, 1), 1, 128).unwrap();
    let level = PI.powf(1.5);
    for target in [level, level + 2.0] {
        let bin = ((target - e[0]) / h + 0.5).floor() as usize;
        assert!((d.values[bin] * h - 1.0).abs() < 1e-12);
    }
}

#[test]
fn overlapping_bands_are_flagged() {
    let w = MovingWallParams::new(0.05, 0.1, base()).unwrap();
    let d = dos_bands(&linspace(0.0, 10.0, 101), &w, (0, 2), 1, 64).unwrap();
    assert!(!d.warnings.is_empty());
    assert!(dos_bands(&linspace(0.0, 10.0, 101), &w, (0, 2), 1, 63).is_err());
}
