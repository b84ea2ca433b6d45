use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use netclear::clearing::{clear_priority_proportional, clear_proportional};
use netclear::compress::{greedy_compress, save_all_but_one};
use netclear::fixtures;
use netclear::gadgets::partition_market;
use netclear::milp_compress::{optimal_compress, CompressOptions, Scale};
use netclear::ClearingModel;
use netclear_bench::{er_market, small_market};

fn clearing(c: &mut Criterion) {
    let mut group = c.benchmark_group("clearing");
    for n in [10, 20, 40] {
        let m = er_market(n, 1);
        group.bench_with_input(BenchmarkId::new("priority", n), &m, |b, m| b.iter(|| clear_priority_proportional(black_box(m))));
        group.bench_with_input(BenchmarkId::new("proportional", n), &m, |b, m| b.iter(|| clear_proportional(black_box(m))));
    }
    group.finish();
}

fn compression(c: &mut Criterion) {
    let mut group = c.benchmark_group("compression");
    group.sample_size(10);
    for n in [20, 40] {
        let m = er_market(n, 2);
        group.bench_with_input(BenchmarkId::new("greedy", n), &m, |b, m| b.iter(|| greedy_compress(black_box(m))));
    }
    let small = small_market(3);
    group.bench_function("save_all_but_one/small", |b| b.iter(|| save_all_but_one(black_box(&small), ClearingModel::Priority)));
    let options = CompressOptions::default();
    group.bench_function("optimal/small", |b| b.iter(|| optimal_compress(black_box(&small), Scale::Auto, &options)));
    let twocycle = fixtures::twocycle();
    group.bench_function("optimal/twocycle", |b| b.iter(|| optimal_compress(black_box(&twocycle), Scale::Auto, &options)));
    let gadget = partition_market(&[1, 1]).expect("even total").market;
    group.bench_function("optimal/partition-1-1", |b| b.iter(|| optimal_compress(black_box(&gadget), Scale::Auto, &options)));
    group.finish();
}

criterion_group!(benches, clearing, compression);
criterion_main!(benches);
