use std::f64::consts::PI;

use levybox::spectral::*;
use levybox::{BoxParams, Grid, GridFunction};
use num_complex::Complex64;
use proptest::prelude::*;

fn local() -> BoxParams {
    BoxParams::new(2.0, 0.5, 1.0, 1.0).unwrap()
}

fn packet(grid: Grid, x0: f64, width: f64, k0: f64) -> GridFunction {
    GridFunction::box_wavefunction(grid, |x| {
        let u = (x - x0) / width;
        Complex64::from_polar((-0.5 * u * u).exp(), k0 * x)
    })
}

#[test]
fn merged_local_spectrum_is_the_standard_ladder() {
    for mass in [0.5, 1.0, 3.0] {
        let p = BoxParams::local(mass, 1.0, 1.0).unwrap();
        let modes = modes_up_to(5, &p).unwrap();
        for (i, mode) in modes.iter().enumerate() {
            let n = (i + 1) as f64;
            let expected = n * n * PI * PI / (2.0 * mass * 4.0);
            assert!((mode.energy - expected).abs() < 1e-12 * expected);
        }
    }
}

#[test]
fn energies_increase_with_index_and_move_with_alpha() {
    let p = BoxParams::new(1.5, 1.0, 1.0, 1.0).unwrap();
    for parity in [Parity::Odd, Parity::Even] {
        let start = if parity == Parity::Odd { 1 } else { 0 };
        let e: Vec<f64> = (start..start + 20).map(|m| eigenvalue(parity, m, &p).unwrap()).collect();
        assert!(e.windows(2).all(|w| w[0] < w[1]));
    }
    // hbar pi m / L > 1 for the odd ground state: increasing in alpha
    let alphas: Vec<f64> = (0..=20).map(|j| 1.05 + 0.0475 * j as f64).collect();
    let rising: Vec<f64> = alphas
        .iter()
        .map(|&a| eigenvalue(Parity::Odd, 1, &BoxParams::new(a, 1.0, 1.0, 1.0).unwrap()).unwrap())
        .collect();
    assert!(rising.windows(2).all(|w| w[0] < w[1]));
    // hbar pi / (2L) < 1 with L = 2: decreasing in alpha
    let falling: Vec<f64> = alphas
        .iter()
        .map(|&a| eigenvalue(Parity::Even, 0, &BoxParams::new(a, 1.0, 1.0, 2.0).unwrap()).unwrap())
        .collect();
    assert!(falling.windows(2).all(|w| w[0] > w[1]));
}

#[test]
fn projection_of_a_mode_is_a_unit_vector() {
    let p = BoxParams::new(1.5, 1.0, 1.0, 1.0).unwrap();
    let g = Grid::new(513, 1.0).unwrap();
    let psi = eigenfunction(&EigenMode::new(Parity::Odd, 2, &p).unwrap(), &g).unwrap();
    let s = project(&psi, &p, 30).unwrap();
    for (mode, a) in &s.entries {
        if mode.parity == Parity::Odd && mode.index == 2 {
            assert!((a - 1.0).norm() < 1e-10);
        } else {
            assert!(a.norm() < 1e-10, "{mode:?}");
        }
    }
    let back = reconstruct(&s, &g).unwrap();
    assert!(back.max_abs_diff(&psi) < 1e-10);
}

#[test]
fn parseval_and_parity_selection_for_a_centred_packet() {
    let p = BoxParams::new(1.5, 1.0, 1.0, 1.0).unwrap();
    let g = Grid::new(2049, 1.0).unwrap();
    let psi = packet(g, 0.0, 0.1, 0.0);
    let s = project(&psi, &p, 300).unwrap();
    assert!(s.truncation_residual.abs() < 1e-10 * psi.norm_sqr());
    assert!(s.warnings.is_empty());
    for (mode, a) in &s.entries {
        if mode.parity == Parity::Odd {
            assert!(a.norm() < 1e-12);
        }
    }
}

#[test]
fn local_packet_revives_at_the_revival_time() {
    let p = local();
    let g = Grid::new(1025, 1.0).unwrap();
    let psi = packet(g, 0.3, 0.08, 20.0);
    let s = project(&psi, &p, 200).unwrap();
    let t = 16.0 / PI;
    let revived = evolve(&s, t);
    assert!(revived.max_coeff_diff(&s) < 1e-12);
    let back = reconstruct(&revived, &g).unwrap();
    assert!(back.max_abs_diff(&psi) < 1e-8);
    let halfway = evolve(&s, t / 2.0);
    assert!(reconstruct(&halfway, &g).unwrap().max_abs_diff(&psi) > 1e-3);
}

#[test]
fn evolution_at_zero_is_identity() {
    let p = BoxParams::new(1.7, 0.8, 1.3, 1.0).unwrap();
    let g = Grid::new(257, 1.0).unwrap();
    let s = project(&packet(g, -0.2, 0.15, 3.0), &p, 60).unwrap();
    assert_eq!(evolve(&s, 0.0).entries, s.entries);
}

proptest! {
    #[test]
    fn evolution_is_unitary(t in -1e3f64..1e3, alpha in 1.01f64..2.0, x0 in -0.5f64..0.5) {
        let p = BoxParams::new(alpha, 1.0, 1.0, 1.0).unwrap();
        let g = Grid::new(257, 1.0).unwrap();
        let s = project(&packet(g, x0, 0.12, 5.0), &p, 64).unwrap();
        let n0 = s.norm_sqr();
        let n1 = evolve(&s, t).norm_sqr();
        prop_assert!((n1 - n0).abs() < 1e-12 * n0);
    }

    #[test]
    fn reconstruction_vanishes_at_walls(t in -50f64..50.0) {
        let p = BoxParams::new(1.5, 1.0, 1.0, 1.0).unwrap();
        let g = Grid::new(129, 1.0).unwrap();
        let s = evolve(&project(&packet(g, 0.1, 0.2, 1.0), &p, 40).unwrap(), t);
        let r = reconstruct(&s, &g).unwrap();
        prop_assert_eq!(r.values()[0].norm(), 0.0);
        prop_assert_eq!(r.values()[128].norm(), 0.0);
    }
}
