use criterion::{black_box, criterion_group, criterion_main, Criterion};
use fdecolloc::catalog::{delay_evp_pencil, find, RunConfig};
use fdecolloc::interp::{barymat, diffmat};
use fdecolloc::solve::eig_smoothest;
use fdecolloc::{cheb_grid, GridKind};

fn operators(c: &mut Criterion) {
    let g = cheb_grid(64, 0.0, 1.0).unwrap();
    let tau: Vec<f64> = g.nodes().iter().map(|t| 0.5 * t).collect();
    c.bench_function("barymat 64", |b| b.iter(|| barymat(black_box(&tau), &g).unwrap()));
    c.bench_function("diffmat 64", |b| b.iter(|| diffmat(black_box(&g), 1).unwrap()));
}

fn examples(c: &mut Criterion) {
    for (name, n) in [("example1", 20), ("example3", 20), ("example6", 12), ("chebfun_ex1", 20)] {
        let spec = find(name).unwrap();
        let cfg = RunConfig::with_n(n);
        c.bench_function(&format!("{name} n={n}"), |b| b.iter(|| spec.run(black_box(&cfg)).unwrap()));
    }
}

fn eigen(c: &mut Criterion) {
    let (a, m, _) = delay_evp_pencil(60).unwrap();
    c.bench_function("delay evp n=60", |b| {
        b.iter(|| eig_smoothest(black_box(&a), &m, 6, 0.0, GridKind::ChebyshevLobatto).unwrap())
    });
}

fn cycles(c: &mut Criterion) {
    let mut group = c.benchmark_group("limit cycles");
    group.sample_size(10);
    for (name, n) in [("example11", 129), ("example13", 25)] {
        let spec = find(name).unwrap();
        let cfg = RunConfig::with_n(n);
        group.bench_function(format!("{name} n={n}"), |b| b.iter(|| spec.run(black_box(&cfg)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, operators, examples, eigen, cycles);
criterion_main!(benches);
