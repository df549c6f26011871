use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use price_core::{
    correlation_coords, f_tau_curve, omega_pack, pair, pair_mc, price_derivative, CovMatrix,
    CovMultiindex, GaussianModel, GeneralizedFunction, IndexPair, QuadratureSpec, Scheme,
};

fn model_alpha(alpha: f64) -> GaussianModel {
    GaussianModel::new(CovMatrix::validate(&omega_pack(&correlation_coords(alpha))).unwrap())
}

fn clip_tensor(tau: f64) -> GeneralizedFunction {
    let c = GeneralizedFunction::clip_1d(tau).unwrap();
    GeneralizedFunction::tensor(&[c.clone(), c]).unwrap()
}

fn bench_pair(c: &mut Criterion) {
    let m = model_alpha(0.5);
    let g_clip = clip_tensor(1.0);
    let g_poly = GeneralizedFunction::monomial(&[3, 2]);
    let q_gh = QuadratureSpec::new(60, Scheme::GaussHermiteWhitened).unwrap();
    let q_rect = QuadratureSpec::new(60, Scheme::RectangleRestricted).unwrap();

    c.bench_function("pair clip tensor, whitened cells, order 60", |b| {
        b.iter(|| pair(black_box(&g_clip), &m, &q_gh).unwrap().value)
    });
    c.bench_function("pair clip tensor, rectangle cells, order 60", |b| {
        b.iter(|| pair(black_box(&g_clip), &m, &q_rect).unwrap().value)
    });
    c.bench_function("pair monomial (degree-exact clamp)", |b| {
        b.iter(|| pair(black_box(&g_poly), &m, &q_gh).unwrap().value)
    });
}

fn bench_price(c: &mut Criterion) {
    let a = correlation_coords(0.5);
    let q = QuadratureSpec::default_for_dim(2);
    let g = clip_tensor(1.0);
    let beta = CovMultiindex::unit(2, IndexPair::new(0, 1));
    c.bench_function("price derivative of clip tensor", |b| {
        b.iter(|| price_derivative(black_box(&g), &a, &beta, &q).unwrap().value)
    });
}

fn bench_monte_carlo(c: &mut Criterion) {
    let m = model_alpha(0.3);
    let g = clip_tensor(1.0);
    c.bench_function("pair_mc clip tensor, 100k samples", |b| {
        b.iter(|| pair_mc(black_box(&g), &m, 7, 100_000).unwrap().value)
    });
}

fn bench_clip_curve(c: &mut Criterion) {
    let q = QuadratureSpec::default_for_dim(2);
    let grid: Vec<f64> = (0..21).map(|k| -0.95 + k as f64 * 0.095).collect();
    c.bench_function("clip curve, 21 grid points", |b| {
        b.iter(|| f_tau_curve(1.0, black_box(&grid), &q).unwrap().values[10])
    });
}

criterion_group!(benches, bench_pair, bench_price, bench_monte_carlo, bench_clip_curve);
criterion_main!(benches);
