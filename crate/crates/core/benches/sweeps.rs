use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use zd_core::characteristics::zd_grid;
use zd_core::datum::Rational;
use zd_core::io::linspace;
use zd_core::par::Exec;
use zd_core::{bo_eps, hardy, rational, InitialDatum, TestFunction};

// Parallel falls back to sequential when built without the `parallel` feature.
const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn grids(c: &mut Criterion) {
    let gauss = InitialDatum::gaussian(1.0, 7.0, 0.01);
    let r = Rational::lorentzian(3.0);
    let xs = linspace(-4.0, 8.0, 2001);
    let mut g = c.benchmark_group("grid");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("characteristics", name), &exec, |b, &e| {
            b.iter(|| zd_grid(black_box(&gauss), 2.0, &xs, e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("rational", name), &exec, |b, &e| {
            b.iter(|| rational::zd_rational_grid(black_box(&r), 1.0, &xs, e).unwrap())
        });
    }
    g.finish();
}

fn hardy_trace(c: &mut Criterion) {
    let d = InitialDatum::Rational(Rational::lorentzian(1.0));
    let op = hardy::HardyOperator::with_modes(&d, 512).unwrap();
    let xs = linspace(-3.0, 3.0, 33);
    let mut g = c.benchmark_group("hardy_trace");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| op.boundary_trace(0.3, &xs, 0.1, e).unwrap())
        });
    }
    g.finish();
}

fn eps_sweep(c: &mut Criterion) {
    let mut cfg = bo_eps::EpsRunConfig::new(InitialDatum::gaussian(1.0, 7.0, 0.01), 0.2, vec![0.3]);
    cfg.modes = 2048;
    let phis = [TestFunction::bump(-1.0, 1.0, 1.0).unwrap()];
    let mut g = c.benchmark_group("eps_sweep");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| bo_eps::eps_sweep(&cfg, 0.3, &[0.2, 0.1, 0.05], &phis, e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, grids, hardy_trace, eps_sweep);
criterion_main!(benches);
