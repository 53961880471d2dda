use std::hint::black_box;

use apent_bench::{haagerup_specs, random_pd, rank2_ball, representation};
use apent_core::entropy::{self, EntropyOptions, Method};
use apent_core::freegroup::{Enumeration, LetterOrder};
use apent_core::matent;
use apent_core::randrep::{self, orbit_gram};
use apent_core::stats::stream_rng;
use apent_core::verblunsky;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn logdet(c: &mut Criterion) {
    let mut g = c.benchmark_group("logdet");
    for dim in [16, 64, 160] {
        let q = random_pd(dim, 1);
        g.bench_with_input(BenchmarkId::from_parameter(dim), &q, |b, q| {
            b.iter(|| matent::logdet(black_box(q)))
        });
    }
    g.finish();
}

fn methods(c: &mut Criterion) {
    let mut g = c.benchmark_group("entropy-level-2");
    g.sample_size(10);
    let opts = EntropyOptions {
        max_level: 2,
        stop_when_stable: false,
        ..EntropyOptions::default()
    };
    for (name, spec) in haagerup_specs() {
        for m in [Method::Formula1, Method::Formula2, Method::Verblunsky, Method::Seward] {
            g.bench_function(BenchmarkId::new(m.name(), name), |b| {
                b.iter(|| entropy::run(black_box(&spec), m, &opts).unwrap())
            });
        }
    }
    g.finish();
}

fn coefficients(c: &mut Criterion) {
    let spec = apent_core::PdfSpec::haagerup(&[0.3, 0.5]);
    let en = Enumeration::length_lex_ball(&LetterOrder::standard(2), 3);
    let steps = en.len() - 1;
    c.bench_function("verblunsky-extract-b3", |b| {
        b.iter(|| verblunsky::coefficient_sequence(black_box(&spec), &en, steps).unwrap())
    });
    let coeffs = verblunsky::coefficient_sequence(&spec, &en, steps).unwrap();
    c.bench_function("verblunsky-reconstruct-b3", |b| {
        b.iter(|| verblunsky::reconstruct(1, black_box(&coeffs), &en).unwrap())
    });
}

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("haar");
    for n in [8, 32] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            let mut rng = stream_rng(3, 0);
            b.iter(|| randrep::haar_unitary(n, &mut rng))
        });
    }
    g.finish();
    let rep = representation(24, 5);
    let f = rank2_ball(1);
    c.bench_function("orbit-gram-b1-n24", |b| {
        b.iter(|| orbit_gram(black_box(&rep), 1, &f).unwrap())
    });
}

criterion_group!(benches, logdet, methods, coefficients, sampling);
criterion_main!(benches);
