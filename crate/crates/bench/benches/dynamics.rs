use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use pbit_osc::dynamics::{dynamics_rng, random_initial_state, run, tick, SimParams};
use pbit_osc::graph::build_couplings;
use pbit_osc::harness::{run_sweep_on, CGrid, GraphSource, SweepConfig};
use pbit_osc::ToyKind;
use pbit_osc_bench::random_graph;

fn single_tick(c: &mut Criterion) {
    let mut group = c.benchmark_group("tick");
    for n in [100, 800, 3000] {
        let j = build_couplings(&random_graph(n, 6.0, 1));
        let params = SimParams::new(1.0, 2.0, 1, 0);
        let s = random_initial_state(n, 3);
        let mut rng = dynamics_rng(5);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| tick(black_box(&s), &j, &params, &mut rng))
        });
    }
    group.finish();
}

fn forty_tick_run(c: &mut Criterion) {
    let j = build_couplings(&random_graph(800, 47.7, 2));
    let params = SimParams::new(1.5, 2.0, 40, 0);
    c.bench_function("run_800_dense_40", |b| b.iter(|| run(&j, black_box(&params), None, "g")));
}

fn small_sweep(c: &mut Criterion) {
    let g = random_graph(200, 6.0, 4);
    let mut cfg = SweepConfig::new(GraphSource::Toy {
        kind: ToyKind::Toy7,
        seed: 0,
    });
    cfg.c_grid = CGrid {
        start: 1.0,
        stop: 5.0,
        step: 0.5,
    };
    c.bench_function("sweep_200_9x5", |b| b.iter(|| run_sweep_on(&g, black_box(&cfg))));
}

criterion_group!(benches, single_tick, forty_tick_run, small_sweep);
criterion_main!(benches);
