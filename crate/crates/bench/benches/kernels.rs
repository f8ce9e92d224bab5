use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mpnr_core::breeding::{breed, BreedingConfig, Detector, Scheme};
use mpnr_core::fock::{split_squeezed_pair, SplitConvention};
use mpnr_core::statistics::{default_l_max, squeezed_click_formula};
use mpnr_core::{click_matrix, DetectorSpec, SqueezeParam, Truncation};

fn click_matrices(c: &mut Criterion) {
    let mut g = c.benchmark_group("click_matrix");
    for n in [10usize, 20, 64] {
        let spec = DetectorSpec::balanced(n).with_efficiency(0.95).with_dark_eps(0.01);
        g.bench_with_input(BenchmarkId::new("balanced", n), &spec, |b, s| {
            b.iter(|| click_matrix(black_box(s), 32).unwrap())
        });
    }
    let weights: Vec<f64> = (1..=20).map(|i| i as f64 / 210.0).collect();
    let uneven = DetectorSpec::balanced(20).with_weights(weights);
    g.bench_function("unbalanced/20", |b| b.iter(|| click_matrix(black_box(&uneven), 32).unwrap()));
    let paired = DetectorSpec::balanced(20).with_corr_p(0.03);
    g.bench_function("pair_correlated/20", |b| {
        b.iter(|| Detector::Mpnr(black_box(paired.clone())).click_matrix(32).unwrap())
    });
    g.finish();
}

fn split_pair(c: &mut Criterion) {
    let r = SqueezeParam::from_db(7.0);
    let mut g = c.benchmark_group("split_squeezed_pair");
    for dim in [16usize, 32] {
        let trunc = Truncation::new(dim).with_tail_tol(1e-3);
        g.bench_with_input(BenchmarkId::new("subtraction", dim), &trunc, |b, t| {
            b.iter(|| split_squeezed_pair(r, None, 0.7, SplitConvention::Subtraction, *t).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("generalized", dim), &trunc, |b, t| {
            b.iter(|| {
                split_squeezed_pair(r, Some(SqueezeParam::from_r(-r.r())), 0.85, SplitConvention::Generalized, *t)
                    .unwrap()
            })
        });
    }
    g.finish();
}

fn breeding(c: &mut Criterion) {
    let r = SqueezeParam::from_db(7.0);
    let det = Detector::Mpnr(DetectorSpec::balanced(20).with_efficiency(0.95));
    let sub = BreedingConfig::new(r, 0.7, 2, det.clone(), Scheme::Subtraction);
    let gen = BreedingConfig::new(r, 0.856, 2, det, Scheme::Generalized);
    c.bench_function("breed/subtraction", |b| b.iter(|| breed(black_box(&sub)).unwrap()));
    c.bench_function("breed/generalized", |b| b.iter(|| breed(black_box(&gen)).unwrap()));
}

fn squeezed_series(c: &mut Criterion) {
    let r = SqueezeParam::from_db(7.0);
    let l = default_l_max(r);
    c.bench_function("squeezed_click_formula/n50", |b| {
        b.iter(|| (0..=50).map(|k| squeezed_click_formula(r, 50, k, l).unwrap()).sum::<f64>())
    });
}

criterion_group!(benches, click_matrices, split_pair, breeding, squeezed_series);
criterion_main!(benches);
