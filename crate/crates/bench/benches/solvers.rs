use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use sglasso_bench::{missing_data_gamma, DIMS};
use sglasso_core::admm::SpectralAdmm;
use sglasso_core::estimators::{estimate, linf_psd_project};
use sglasso_core::logdet_prox::t_rho;
use sglasso_core::{AdmmConfig, EstimatorSpec, EstimatorVariant, Penalty, RadiusSpec};

fn eigendecomposition(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigen");
    for m in DIMS {
        let gamma = missing_data_gamma(m, 1);
        g.bench_with_input(BenchmarkId::from_parameter(m), &gamma, |b, gamma| {
            b.iter(|| black_box(gamma.eigen().unwrap()))
        });
    }
    g.finish();
}

fn logdet_prox(c: &mut Criterion) {
    let mut g = c.benchmark_group("t_rho");
    for m in DIMS {
        let gamma = missing_data_gamma(m, 2);
        g.bench_with_input(BenchmarkId::from_parameter(m), &gamma, |b, gamma| {
            b.iter(|| black_box(t_rho(gamma, 12.0, 5.0).unwrap()))
        });
    }
    g.finish();
}

fn admm_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("admm_step");
    for m in DIMS {
        let gamma = missing_data_gamma(m, 3);
        for (name, penalty) in [("l1", Penalty::l1(0.2).unwrap()), ("mcp", Penalty::mcp(0.3, 2.5).unwrap())] {
            let solver = SpectralAdmm::new(&gamma, penalty, AdmmConfig::new(12.0, 5.0)).unwrap();
            g.bench_with_input(BenchmarkId::new(name, m), &solver, |b, solver| {
                b.iter_batched(
                    || solver.clone(),
                    |mut s| black_box(s.step().unwrap()),
                    BatchSize::LargeInput,
                )
            });
        }
    }
    g.finish();
}

fn full_solves(c: &mut Criterion) {
    let mut g = c.benchmark_group("estimate_m100");
    g.sample_size(10);
    let gamma = missing_data_gamma(100, 4);
    let l1 = Penalty::l1(0.2).unwrap();
    let glasso = EstimatorSpec::new(EstimatorVariant::NonprojGlasso, l1, 5.0).with_solver(AdmmConfig::new(4.0, 5.0));
    g.bench_function("nonproj_l1", |b| b.iter(|| black_box(estimate(&gamma, &glasso, None).unwrap())));
    let mut nodewise = EstimatorSpec::new(EstimatorVariant::Nodewise, l1, 5.0);
    nodewise.radius = RadiusSpec::Fixed(1.5);
    g.bench_function("nodewise", |b| b.iter(|| black_box(estimate(&gamma, &nodewise, None).unwrap())));
    g.bench_function("linf_projection", |b| b.iter(|| black_box(linf_psd_project(&gamma, 1e-4).unwrap())));
    g.finish();
}

criterion_group!(benches, eigendecomposition, logdet_prox, admm_step, full_solves);
criterion_main!(benches);
