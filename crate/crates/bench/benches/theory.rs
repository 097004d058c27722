use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use pbit_osc::graph::build_couplings;
use pbit_osc::theory::{
    alpha_eff, boundary_curve, CouplingSpectrum, EigenMethod, TheoryParams, Variant,
};
use pbit_osc_bench::random_graph;

fn gain(c: &mut Criterion) {
    let mut group = c.benchmark_group("alpha_eff");
    for a in [0.5, 4.0, 7.5, 20.0] {
        group.bench_with_input(BenchmarkId::from_parameter(a), &a, |b, &a| b.iter(|| alpha_eff(black_box(a), 1.0)));
    }
    group.finish();
}

fn spectrum(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectrum");
    group.sample_size(10);
    let j = build_couplings(&random_graph(800, 6.0, 1));
    for method in [EigenMethod::Dense, EigenMethod::Lanczos] {
        group.bench_function(format!("{method:?}_800"), |b| {
            b.iter(|| CouplingSpectrum::compute_with(&j, 8, 1.0, method).unwrap())
        });
    }
    group.finish();
}

fn curve(c: &mut Criterion) {
    let j = build_couplings(&random_graph(200, 6.0, 2));
    let i0_max = j.i0_max().unwrap();
    let grid: Vec<f64> = (1..=50).map(|k| i0_max * k as f64 / 50.0).collect();
    let params = TheoryParams::default();
    c.bench_function("boundary_curve_200_50", |b| {
        b.iter(|| boundary_curve(&j, black_box(&grid), &params, Variant::IprCorrected).unwrap())
    });
}

criterion_group!(benches, gain, spectrum, curve);
criterion_main!(benches);
