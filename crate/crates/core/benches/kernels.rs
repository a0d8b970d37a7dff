//! Rayon pool versus the forced sequential path on the hot kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use levybox::operator::apply_operator_realspace;
use levybox::propagator::{compose_box_kernel, green_images_grid_regularized};
use levybox::stable::{circular_convolution, periodic_density};
use levybox::{par, BoxParams, Grid, GridFunction};
use num_complex::Complex64;
use std::hint::black_box;

fn frac() -> BoxParams {
    BoxParams::new(1.5, 1.0, 1.0, 1.0).unwrap()
}

fn paths<F: Fn()>(c: &mut Criterion, name: &str, f: F) {
    let mut group = c.benchmark_group(name);
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("path", "parallel"), |b| b.iter(&f));
    group.bench_function(BenchmarkId::new("path", "sequential"), |b| b.iter(|| par::sequential(&f)));
    group.finish();
}

fn kernels(c: &mut Criterion) {
    let p = frac();
    let g = Grid::new(1025, 1.0).unwrap();
    let psi = GridFunction::box_wavefunction(g, |x| Complex64::new((std::f64::consts::PI * x).sin(), 0.0));
    paths(c, "operator_1025", || {
        black_box(apply_operator_realspace(&psi, &p).unwrap());
    });

    let small = Grid::new(11, 1.0).unwrap();
    paths(c, "images_grid_11", || {
        black_box(green_images_grid_regularized(&small, 0.5, &p, 12, 1e-3).unwrap());
    });

    let a = periodic_density(1.5, 0.5, 2048, 0.05, 0.0);
    paths(c, "convolution_2048", || {
        black_box(circular_convolution(&a, &a, 0.05).unwrap());
    });

    let cg = Grid::new(129, 1.0).unwrap();
    paths(c, "compose_129", || {
        black_box(compose_box_kernel(4, 0.1, 2.0, 1.0, &cg).unwrap());
    });
}

criterion_group!(benches, kernels);
criterion_main!(benches);
