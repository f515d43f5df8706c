use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rbdad::autodiff::forward_jacobian;
use rbdad::compile::{JacobianMode, OptimizationConfig};
use rbdad::deriv::{DerivativeProvider, RobotDerivatives};
use rbdad::model::fixture;
use rbdad::sampling::DEFAULT_SEED;
use rbdad_bench::{fd_input, BENCH_FIXTURES};

fn fd_jacobian(c: &mut Criterion) {
    let mut g = c.benchmark_group("fd_jacobian");
    for name in BENCH_FIXTURES {
        let m = Arc::new(fixture(name).unwrap());
        let x = fd_input(&m, DEFAULT_SEED);
        let d = RobotDerivatives::new(m, &OptimizationConfig::default(), DEFAULT_SEED).unwrap();
        let e = d.forward_dynamics();
        g.bench_with_input(BenchmarkId::new("numdiff", name), &x, |b, x| {
            b.iter(|| e.jacobian(x, DerivativeProvider::NumDiff).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("forward_ad", name), &x, |b, x| {
            b.iter(|| forward_jacobian(e.function(), x, None).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("tape_reverse", name), &x, |b, x| {
            b.iter(|| e.tape().reverse_jacobian(x).unwrap())
        });
        for mode in [JacobianMode::Forward, JacobianMode::Reverse] {
            let p = e.compiled(mode).program();
            let mut ws = p.workspace();
            let mut out = vec![0.0; p.n_outputs()];
            g.bench_with_input(
                BenchmarkId::new(format!("compiled_{}", mode.name()), name),
                &x,
                |b, x| b.iter(|| p.eval_with(&mut ws, x, &mut out).unwrap()),
            );
        }
    }
    g.finish();
}

criterion_group!(benches, fd_jacobian);
criterion_main!(benches);
