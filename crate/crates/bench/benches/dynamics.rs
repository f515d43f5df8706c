use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rbdad::dynamics::{aba, crba, rnea};
use rbdad::model::fixture;
use rbdad::sampling::DEFAULT_SEED;
use rbdad_bench::{fd_input, id_input, BENCH_FIXTURES};

fn dynamics(c: &mut Criterion) {
    let mut g = c.benchmark_group("dynamics");
    for name in BENCH_FIXTURES {
        let m = fixture(name).unwrap();
        let p = m.params::<f64>();
        let n = m.n_dof();
        let x = fd_input(&m, DEFAULT_SEED);
        let (q, qd, tau) = (&x[..n], &x[n..2 * n], &x[2 * n..]);
        let tau = m.apply_selection_transpose(tau).unwrap();
        let y = id_input(&m, DEFAULT_SEED);
        g.bench_with_input(BenchmarkId::new("aba", name), &(), |b, _| {
            b.iter(|| aba(&p, q, qd, &tau, None).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("rnea", name), &(), |b, _| {
            b.iter(|| rnea(&p, &y[..n], &y[n..2 * n], &y[2 * n..], None).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("crba", name), &(), |b, _| {
            b.iter(|| crba(&p, q).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, dynamics);
criterion_main!(benches);
