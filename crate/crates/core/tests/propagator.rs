use levybox::propagator::*;
use levybox::{BoxParams, Error, Grid, QuadratureSpec};
use num_complex::Complex64;
use proptest::prelude::*;

fn frac() -> BoxParams {
    BoxParams::new(1.5, 1.0, 1.0, 1.0).unwrap()
}

fn local() -> BoxParams {
    BoxParams::new(2.0, 0.5, 1.0, 1.0).unwrap()
}

/// Odd-sector spectral sum with the same momentum damping as the images.
fn spectral_at(x: f64, x0: f64, t: f64, p: &BoxParams, eta: f64) -> GreenEvaluation {
    green_spectral_damped(x, x0, t, p, 2000, Sector::Odd, Damping::Gaussian(eta)).unwrap()
}

#[test]
fn image_and_spectral_sums_agree_at_each_regularization() {
    let p = frac();
    let q = QuadratureSpec::for_box(&p);
    for (x, x0, t) in [(0.3, -0.2, 0.5), (-0.7, 0.45, 0.2), (0.05, 0.9, 1.3)] {
        for eta in &eta_ladder(&q)[..2] {
            let img = green_images_regularized(x, x0, t, &p, 25, *eta).unwrap();
            let spec = spectral_at(x, x0, t, &p, *eta);
            let diff = (img.value - spec.value).norm();
            assert!(diff <= img.error_budget + spec.error_budget, "({x}, {x0}, {t}) eta {eta}: {diff:e}");
            assert!(diff < 1e-4);
        }
    }
}

#[test]
fn grid_evaluation_matches_pointwise_images() {
    let p = frac();
    let g = Grid::new(11, 1.0).unwrap();
    let eta = 1e-3;
    let all = green_images_grid_regularized(&g, 0.5, &p, 12, eta).unwrap();
    for (i, j) in [(1, 2), (5, 5), (9, 3), (0, 7)] {
        let one = green_images_regularized(g.node(i), g.node(j), 0.5, &p, 12, eta).unwrap();
        assert!((all[i * 11 + j].value - one.value).norm() < 1e-10);
    }
}

#[test]
fn images_are_invariant_under_joint_reflection() {
    let p = frac();
    let a = green_images_regularized(0.4, -0.1, 0.6, &p, 15, 1e-3).unwrap();
    let b = green_images_regularized(-0.4, 0.1, 0.6, &p, 15, 1e-3).unwrap();
    assert!((a.value - b.value).norm() < 1e-12);
}

#[test]
fn images_vanish_at_the_walls_within_budget() {
    let p = frac();
    for x in [-1.0, 1.0] {
        let g = green_images_regularized(x, 0.3, 0.5, &p, 20, 1e-3).unwrap();
        assert!(g.value.norm() <= g.error_budget);
    }
}

#[test]
fn extrapolation_gate_rejects_an_oscillating_ladder() {
    let p = frac();
    let q = QuadratureSpec::for_box(&p);
    let g = Grid::new(41, 1.0).unwrap();
    match green_images(g.node(1), g.node(2), 0.5, &p, 25, &q) {
        Err(Error::NonMonotoneExtrapolation { .. }) => {}
        other => panic!("expected a non-monotone ladder, got {other:?}"),
    }
    let no_eta = QuadratureSpec { eta: 0.0, ..q };
    assert!(green_images(0.1, 0.2, 0.5, &p, 25, &no_eta).is_err());
}

#[test]
fn local_images_equal_the_closed_form_term_by_term() {
    let p = local();
    let q = QuadratureSpec::for_box(&p);
    for (x, x0, t) in [(0.3, -0.2, 0.7), (-0.6, -0.1, 0.25)] {
        for eta in &eta_ladder(&q)[..2] {
            let img = green_images_regularized(x, x0, t, &p, 20, *eta).unwrap();
            let closed = green_box_alpha2_regularized(x, x0, t, &p, 20, *eta).unwrap();
            assert!((img.value - closed.raw.value).norm() < 1e-8);
        }
    }
}

#[test]
fn local_closed_form_is_the_odd_sector() {
    let p = local();
    let eta = 2e-3;
    for (x, x0, t) in [(0.3, -0.2, 0.7), (0.5, 0.5, 0.1), (-0.8, 0.25, 0.4)] {
        let closed = green_box_alpha2_regularized(x, x0, t, &p, 40, eta).unwrap();
        let odd = spectral_at(x, x0, t, &p, eta);
        let d = (closed.raw.value - odd.value).norm();
        assert!(d < 1e-10, "({x}, {x0}, {t}): {d:e}");
        let both = green_spectral_damped(x, x0, t, &p, 2000, Sector::Both, Damping::Gaussian(eta)).unwrap();
        assert!((closed.raw.value - both.value).norm() > 1e-3);
    }
    // long times outrun 40 windings; the budget has to say so
    let closed = green_box_alpha2_regularized(-0.8, 0.25, 1.9, &p, 40, eta).unwrap();
    let odd = spectral_at(-0.8, 0.25, 1.9, &p, eta);
    let d = (closed.raw.value - odd.value).norm();
    assert!(d > 1e-6 && d <= closed.raw.error_budget);
}

#[test]
fn cesaro_average_steadies_the_winding_sum() {
    let p = local();
    let (x, x0, t) = (0.3, -0.2, 0.7);
    let g20 = green_box_alpha2(x, x0, t, &p, 20).unwrap();
    let g40 = green_box_alpha2(x, x0, t, &p, 40).unwrap();
    let raw = (g40.raw.value - g20.raw.value).norm();
    let avg = (g40.cesaro.value - g20.cesaro.value).norm();
    assert!(avg < raw, "cesaro {avg:e} raw {raw:e}");
    let flipped = green_box_alpha2(-x, -x0, t, &p, 20).unwrap();
    assert!((flipped.raw.value - g20.raw.value).norm() < 1e-12);
    assert!(green_box_alpha2(x, x0, 0.0, &p, 20).is_err());
    assert!(green_box_alpha2(x, x0, t, &frac(), 20).is_err());
}

#[test]
fn spectral_sum_is_symmetric() {
    let p = frac();
    for sector in [Sector::Odd, Sector::Even, Sector::Both] {
        let a = green_spectral(0.2, -0.55, 0.3, &p, 200, sector).unwrap();
        let b = green_spectral(-0.55, 0.2, 0.3, &p, 200, sector).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.sector, sector);
        assert_eq!(a.method, Method::Spectral);
    }
}

#[test]
fn unregularized_spectral_sum_warns_about_truncation() {
    let g = green_spectral(0.2, -0.55, 0.3, &frac(), 200, Sector::Odd).unwrap();
    assert!(!g.warnings.is_empty());
    assert!(g.error_budget > 0.0);
}

proptest! {
    #[test]
    fn spectral_time_reversal(x in -1.0f64..1.0, x0 in -1.0f64..1.0, t in 0.01f64..5.0) {
        let p = frac();
        let f = green_spectral(x, x0, t, &p, 100, Sector::Both).unwrap();
        let b = green_spectral(x, x0, -t, &p, 100, Sector::Both).unwrap();
        prop_assert!((f.value - b.value.conj()).norm() < 1e-12);
    }

    #[test]
    fn closed_form_time_reversal(x in -1.0f64..1.0, x0 in -1.0f64..1.0, t in 0.05f64..5.0) {
        let p = local();
        let f = green_box_alpha2(x, x0, t, &p, 20).unwrap();
        let b = green_box_alpha2(x, x0, -t, &p, 20).unwrap();
        prop_assert!((f.raw.value - b.raw.value.conj()).norm() < 1e-12);
    }
}

#[test]
fn free_kernel_lattice_is_consistent_for_fractional_index() {
    let rule = FreeKernelRule::new(&frac(), 0.5, 1e-3, 10.0).unwrap();
    let lat = rule.lattice(0.05, 200);
    for n in [0, 7, 64, 130, 200] {
        assert!((lat[n] - rule.eval(n as f64 * 0.05)).norm() < 1e-11);
    }
    assert!(rule.error_bound() > 0.0);
}

#[test]
fn single_step_composition_is_exact() {
    let g = Grid::new(65, 1.0).unwrap();
    let c = compose_box_kernel(1, 0.1, 1.5, 1.0, &g).unwrap();
    assert_eq!(c.residual, 0.0);
}

#[test]
fn gaussian_box_kernel_composes() {
    let g = Grid::new(257, 1.0).unwrap();
    let c = compose_box_kernel(4, 0.1, 2.0, 1.0, &g).unwrap();
    assert!(c.residual < 1e-6, "{:e}", c.residual);
    assert!(c.warnings.is_empty());
    for j in 0..257 {
        assert!(c.composed_at(0, j).abs() < 1e-10);
        assert!(c.composed_at(256, j).abs() < 1e-10);
    }
    assert!(c.min_same_side >= -1e-12);
}

#[test]
fn stable_box_kernels_compose() {
    let g = Grid::new(129, 1.0).unwrap();
    for alpha in [1.0, 1.5] {
        let c = compose_box_kernel(3, 0.15, alpha, 1.0, &g).unwrap();
        assert!(c.residual < 1e-6, "alpha {alpha}: {:e}", c.residual);
        assert!(c.min_same_side >= -1e-12);
        // heavy tails leak past 50 windings
        assert!(!c.warnings.is_empty());
        assert!(c.leak > LEAK_TOL);
    }
    assert!(compose_box_kernel(0, 0.1, 1.5, 1.0, &g).is_err());
}

#[test]
fn eta_ladder_spans_two_decades() {
    let q = QuadratureSpec::for_box(&frac());
    let l = eta_ladder(&q);
    assert_eq!(l[0], q.eta);
    assert!((l[2] / l[0] - 1e-2).abs() < 1e-15);
    let ex = extrapolate_eta(&l, &[Complex64::new(1.0, 0.0); 3], 0.0);
    assert!((ex.value - 1.0).norm() < 1e-13 && ex.monotone);
}

#[test]
fn source_columns_match_the_full_grid() {
    let p = frac();
    let g = Grid::new(11, 1.0).unwrap();
    let all = green_images_grid_regularized(&g, 0.5, &p, 12, 1e-3).unwrap();
    let cols = green_images_sources_regularized(&g, &[3, 7], 0.5, &p, 12, 1e-3).unwrap();
    for (c, j) in [3, 7].into_iter().enumerate() {
        for i in 0..11 {
            assert_eq!(cols[c * 11 + i].value, all[j * 11 + i].value);
            assert!((cols[c * 11 + i].value - all[i * 11 + j].value).norm() < 1e-15);
        }
    }
    assert!(green_images_sources_regularized(&g, &[11], 0.5, &p, 12, 1e-3).is_err());
}
