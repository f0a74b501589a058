use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use fbmbt::calculus::midpoint_taylor_table;
use fbmbt::fgn::{sum_rho_cubed, FgnSampler, HurstExponent};
use fbmbt::limitlaw::{default_kappa, CorrectionSampler};
use fbmbt::rng::{stream_rng, FBM_STREAM};
use fbmbt::skeleton::crossings_bruteforce;
use fbmbt::variations::{v3, v_tilde_3};
use fbmbt::TestFunction2D;
use fbmbt_bench::{grid, pair, walk, SEED};

fn fgn_sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("fgn");
    let h = HurstExponent::one_sixth();
    let cached = FgnSampler::with_capacity(h, 4096).unwrap();
    let spectral = FgnSampler::new(h);
    for count in [1usize << 10, 1 << 12, 1 << 16] {
        g.throughput(Throughput::Elements(count as u64));
        let sampler = if count <= 4096 { &cached } else { &spectral };
        g.bench_with_input(BenchmarkId::from_parameter(count), &count, |b, &count| {
            let mut rng = stream_rng(SEED, FBM_STREAM);
            b.iter(|| sampler.sample(count, &mut rng).unwrap())
        });
    }
    g.finish();
}

fn variations(c: &mut Criterion) {
    let f = TestFunction2D::SinCos(1.0, 1.0);
    let mut g = c.benchmark_group("variations");
    for n in [12u32, 16, 20] {
        let path = grid(1.0 / 6.0, n);
        g.bench_with_input(BenchmarkId::new("v3", n), &path, |b, p| b.iter(|| v3(&f, p, 1.0).unwrap()));
    }
    for n in [10u32, 14] {
        let (x, w) = pair(1.0 / 6.0, n);
        g.bench_with_input(BenchmarkId::new("v_tilde_3", n), &(x, w), |b, (x, w)| {
            b.iter(|| v_tilde_3(&f, x, w, 1.0).unwrap())
        });
    }
    g.finish();
}

fn skeleton(c: &mut Criterion) {
    let path = walk(16);
    c.bench_function("crossings_bruteforce_2^16", |b| b.iter(|| crossings_bruteforce(&path, 1 << 16).unwrap()));
}

fn constants(c: &mut Criterion) {
    let mut g = c.benchmark_group("constants");
    g.sample_size(10);
    g.bench_function("sum_rho_cubed_1e6", |b| b.iter(|| sum_rho_cubed(black_box(HurstExponent::one_sixth()), 1_000_000)));
    g.bench_function("taylor_table_13", |b| b.iter(|| midpoint_taylor_table(black_box(13)).unwrap()));
    let sampler = CorrectionSampler::with_capacity(default_kappa(), 1024).unwrap();
    let f = TestFunction2D::Monomial(3, 0);
    g.bench_function("correction_fbm_1024", |b| b.iter(|| sampler.fbm(&f, 1.0, 1.0 / 1024.0, black_box(SEED)).unwrap()));
    g.finish();
}

criterion_group!(benches, fgn_sampling, variations, skeleton, constants);
criterion_main!(benches);
