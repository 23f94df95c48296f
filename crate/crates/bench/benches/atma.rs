use std::hint::black_box;

use atma_core::alias::block_spectrum;
use atma_core::beam::{angle_grid, array_factor, AfForm};
use atma_core::link::{dft_oracle, simulate_link, LinkParams};
use atma_core::metrics::{aclr, aclr_for, AclrSide};
use atma_core::{ArrayConfig, ModConfig, Precoder};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn aliased_spectrum(c: &mut Criterion) {
    let mut g = c.benchmark_group("block_spectrum");
    for a in [4usize, 32, 128] {
        let cfg = ModConfig::new(4, a, 1).unwrap();
        let p = Precoder::alternating(a);
        g.bench_with_input(BenchmarkId::from_parameter(a), &a, |b, _| {
            b.iter(|| block_spectrum(black_box(&cfg), 0, &p, cfg.default_window()).unwrap())
        });
    }
    g.finish();
}

fn aclr_paths(c: &mut Criterion) {
    let cfg = ModConfig::new(32, 32, 1).unwrap();
    let p = Precoder::alternating(32);
    let spec = block_spectrum(&cfg, 0, &p, 64).unwrap();
    c.bench_function("aclr/windowed", |b| b.iter(|| aclr(black_box(&spec)).unwrap()));
    c.bench_function("aclr/exact", |b| b.iter(|| aclr_for(black_box(&cfg), &p, AclrSide::Lower).unwrap()));
}

fn oracle(c: &mut Criterion) {
    let cfg = ModConfig::new(8, 4, 2).unwrap();
    c.bench_function("dft_oracle/N8_A4_O2", |b| b.iter(|| dft_oracle(black_box(&cfg), 1, 8, 16).unwrap()));
}

fn link(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate_link");
    g.sample_size(20);
    for a in [4usize, 32] {
        let cfg = ModConfig::new(2, a, 1).unwrap();
        let params = LinkParams::new(cfg, 64);
        g.bench_with_input(BenchmarkId::from_parameter(a), &params, |b, p| {
            b.iter(|| simulate_link(black_box(p)).unwrap())
        });
    }
    g.finish();
}

fn beampattern(c: &mut Criterion) {
    let cfg = ModConfig::new(4, 8, 2).unwrap();
    let acfg = ArrayConfig::new(8, 0.5, 28e9).unwrap();
    let theta = angle_grid(18001);
    c.bench_function("array_factor/18001", |b| {
        b.iter(|| array_factor(black_box(&theta), 0, 1, &acfg, &cfg, AfForm::Full))
    });
}

criterion_group!(benches, aliased_spectrum, aclr_paths, oracle, link, beampattern);
criterion_main!(benches);
