use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tokenscale::data::load_sim_config;
use tokenscale::impact::{geometric_grid, impact_exponent_probe, CfmmPool, Venue};
use tokenscale::kelly::{estimate_cov, kelly_multi};
use tokenscale::powerlaw::{fit_rank_size, rank_size_partial_sum, select_xmin};
use tokenscale::sim::run_sim;
use tokenscale::synth;

fn powerlaw(c: &mut Criterion) {
    let mut group = c.benchmark_group("powerlaw");
    // the xmin scan is quadratic in n
    group.sample_size(10);
    for n in [1_000, 10_000] {
        let sample = synth::noisy_rank_size(1e3, 1.644, n, 0.1, 1).unwrap();
        group.bench_with_input(BenchmarkId::new("fit_rank_size", n), &sample, |b, s| {
            b.iter(|| fit_rank_size(black_box(s)).unwrap())
        });
        let values = synth::pareto(2.0, 1.0, n, &mut synth::rng(2));
        group.bench_with_input(BenchmarkId::new("select_xmin", n), &values, |b, v| {
            b.iter(|| select_xmin(black_box(v)).unwrap())
        });
    }
    group.bench_function("partial_sum_1e6", |b| {
        b.iter(|| rank_size_partial_sum(1.0, black_box(1.644), 1_000_000))
    });
    group.finish();
}

fn impact(c: &mut Criterion) {
    let pool = CfmmPool::new(2e6, 7e6, 0.003).unwrap();
    c.bench_function("cfmm_execute", |b| {
        b.iter(|| black_box(pool).execute(black_box(1e3)).unwrap())
    });
    let venue = Venue::dex("A", "B", pool).unwrap();
    let grid = geometric_grid(2e2, 2e4, 25).unwrap();
    c.bench_function("dex_probe_25", |b| {
        b.iter(|| impact_exponent_probe(black_box(&venue), &grid).unwrap())
    });
}

fn kelly(c: &mut Criterion) {
    let mut group = c.benchmark_group("kelly");
    for m in [5, 20] {
        let mut rng = synth::rng(3);
        let series: Vec<_> = (0..m)
            .map(|_| synth::gbm_series(0.1, 0.5, 1.0 / 365.0, 365, 1.0, 86_400, &mut rng).unwrap())
            .collect();
        let stats = estimate_cov(&series, 365.0).unwrap();
        group.bench_with_input(BenchmarkId::new("estimate_cov", m), &series, |b, s| {
            b.iter(|| estimate_cov(black_box(s), 365.0).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("kelly_multi", m), &stats, |b, s| {
            b.iter(|| kelly_multi(black_box(s), 0.5).unwrap())
        });
    }
    group.finish();
}

fn sim(c: &mut Criterion) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples/market.json");
    let config = load_sim_config(&path).unwrap();
    c.bench_function("run_sim_market", |b| {
        b.iter(|| run_sim(black_box(&config)).unwrap())
    });
}

criterion_group!(benches, powerlaw, impact, kelly, sim);
criterion_main!(benches);
