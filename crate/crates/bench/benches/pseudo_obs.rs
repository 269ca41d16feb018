use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rmst_sl::{km_fit, split_pobs, standard_pobs, standard_pobs_naive};
use rmst_sl_bench::{halves, scheme_one};
use std::hint::black_box;

fn km(c: &mut Criterion) {
    let mut group = c.benchmark_group("km_fit");
    for n in [100, 1000, 10_000] {
        let (data, _) = scheme_one(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, d| b.iter(|| km_fit(black_box(d))));
    }
    group.finish();
}

fn jackknife(c: &mut Criterion) {
    let mut group = c.benchmark_group("standard_pobs");
    for n in [100, 500, 2000] {
        let (data, tau) = scheme_one(n);
        group.bench_with_input(BenchmarkId::new("fast", n), &data, |b, d| {
            b.iter(|| standard_pobs(black_box(d), tau))
        });
        if n <= 500 {
            group.bench_with_input(BenchmarkId::new("naive", n), &data, |b, d| {
                b.iter(|| standard_pobs_naive(black_box(d), tau))
            });
        }
    }
    group.finish();
}

fn split(c: &mut Criterion) {
    let mut group = c.benchmark_group("split_pobs");
    for n in [100, 1000, 5000] {
        let (data, tau) = scheme_one(n);
        let (km_set, eval_set) = halves(&data);
        let tau = tau.min(km_set.max_time().unwrap());
        group.bench_with_input(BenchmarkId::from_parameter(n), &(km_set, eval_set), |b, (k, e)| {
            b.iter(|| split_pobs(black_box(k), black_box(e), tau))
        });
    }
    group.finish();
}

criterion_group!(benches, km, jackknife, split);
criterion_main!(benches);
