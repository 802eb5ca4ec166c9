use criterion::{Criterion, criterion_group, criterion_main};
use std::hint::black_box;

use assort_bench::instance;
use assort_core::mallows::{self, MallowsParams};
use assort_core::market::Side;
use assort_core::matching::{deferred_acceptance, enumerate_stable};
use assort_core::metrics::{maximal_displacement, pair_gaps};
use assort_core::rng::substream;

fn bench_sampler(c: &mut Criterion) {
    let mut group = c.benchmark_group("mallows_sample");
    for (t, phi) in [(100usize, 0.5), (1000, 0.5), (1000, 0.9), (1000, 1.0)] {
        let params = MallowsParams::new(phi, t).unwrap();
        let mut rng = substream(1, &[t as u64]);
        group.bench_function(format!("t{t}_phi{phi}"), |b| {
            b.iter(|| black_box(mallows::sample(&params, &mut rng)))
        });
    }
    group.finish();
}

fn bench_deferred_acceptance(c: &mut Criterion) {
    let mut group = c.benchmark_group("deferred_acceptance");
    for phi in [0.9, 1.0] {
        let inst = instance(500, 0, phi);
        group.bench_function(format!("n500_phi{phi}"), |b| {
            b.iter(|| black_box(deferred_acceptance(&inst, Side::Men)))
        });
    }
    let unbalanced = instance(500, 5, 0.9);
    group.bench_function("n500_k5_women_proposing", |b| {
        b.iter(|| black_box(deferred_acceptance(&unbalanced, Side::Women)))
    });
    group.finish();
}

fn bench_enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_stable");
    group.sample_size(20);
    for phi in [0.9, 1.0] {
        let inst = instance(30, 0, phi);
        group.bench_function(format!("n30_phi{phi}_cap1k"), |b| {
            b.iter(|| black_box(enumerate_stable(&inst, 1000).unwrap()))
        });
    }
    group.finish();
}

fn bench_metrics(c: &mut Criterion) {
    let mut group = c.benchmark_group("metrics");
    let inst = instance(1000, 0, 0.9);
    let mu = deferred_acceptance(&inst, Side::Men);
    group.bench_function("pair_gaps_n1000", |b| {
        b.iter(|| black_box(pair_gaps(&inst, &mu).unwrap()))
    });
    group.bench_function("maximal_displacement_n1000", |b| {
        b.iter(|| black_box(maximal_displacement(inst.men_prefs())))
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_sampler,
    bench_deferred_acceptance,
    bench_enumeration,
    bench_metrics
);
criterion_main!(benches);
