use std::hint::black_box;

use ccd_bench::{symmetric_matrix, QuadraticFixture};
use ccd_core::algorithms::{pccd_run, vrccd_run, PccdConfig, SampleSharing, VrccdConfig};
use ccd_core::problems::Components;
use ccd_core::smoothness::{spectral_norm, step_size, EstimatorParams, StepSizeMode};
use ccd_core::Regularizer;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

const CYCLES: usize = 20;

fn pccd_cycles(c: &mut Criterion) {
    let mut group = c.benchmark_group("pccd");
    for &(d, m) in &[(64, 1), (64, 8), (256, 16)] {
        let fx = QuadraticFixture::new(32, d, m, 1).unwrap();
        let cfg = PccdConfig::new(CYCLES, fx.metric.clone(), fx.x0.clone());
        group.throughput(Throughput::Elements(CYCLES as u64));
        group.bench_with_input(BenchmarkId::new("cycles", format!("d{d}_m{m}")), &cfg, |b, cfg| {
            b.iter(|| pccd_run(&fx.problem, &Regularizer::L1(0.1), black_box(cfg)).unwrap())
        });
    }
    group.finish();
}

fn vrccd_cycles(c: &mut Criterion) {
    let mut group = c.benchmark_group("vrccd");
    let n = 128;
    let fx = QuadraticFixture::new(n, 64, 8, 2).unwrap();
    for sharing in [SampleSharing::FreshPerBlock, SampleSharing::SharedPerCycle] {
        let (b, bprime) = (n, 11);
        let p = bprime as f64 / (b + bprime) as f64;
        let params = EstimatorParams { p, b, bprime, components: Components::Finite(n) };
        let eta = step_size(fx.l_hat, fx.l_tilde, params, StepSizeMode::Theorem3).unwrap().eta;
        let cfg = VrccdConfig::new(CYCLES, eta, p, b, bprime, fx.metric.clone(), fx.x0.clone()).with_sharing(sharing);
        group.throughput(Throughput::Elements(CYCLES as u64));
        group.bench_with_input(BenchmarkId::new("cycles", format!("{sharing:?}")), &cfg, |bench, cfg| {
            bench.iter(|| vrccd_run(&fx.problem, &Regularizer::L1(0.1), black_box(cfg)).unwrap())
        });
    }
    group.finish();
}

fn spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral_norm");
    for d in [16, 64, 256] {
        let a = symmetric_matrix(d);
        group.bench_with_input(BenchmarkId::from_parameter(d), &a, |b, a| {
            b.iter(|| spectral_norm(black_box(a), 1e-10, 10_000).unwrap())
        });
    }
    group.finish();
}

fn prox(c: &mut Criterion) {
    let mut group = c.benchmark_group("metric_prox");
    let d = 256;
    let center: Vec<f64> = (0..d).map(|i| (i as f64).sin()).collect();
    let linear: Vec<f64> = (0..d).map(|i| (i as f64).cos()).collect();
    let lambda = vec![2.5; d];
    let mut out = vec![0.0; d];
    for (name, reg) in [("l1", Regularizer::L1(0.3)), ("box", Regularizer::Box { lo: -0.5, hi: 0.5 })] {
        group.throughput(Throughput::Elements(d as u64));
        group.bench_function(name, |b| {
            b.iter(|| reg.prox_into(0, black_box(&center), black_box(&linear), 0.7, &lambda, &mut out))
        });
    }
    group.finish();
}

criterion_group!(benches, pccd_cycles, vrccd_cycles, spectral, prox);
criterion_main!(benches);
