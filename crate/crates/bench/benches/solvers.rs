use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use qifs_bench::{elementary_pair, random_model};
use qifs_core::solvers::{solve_lambda_fixed_point, solve_ruelle_eigen, SolveConfig};
use qifs_core::thermo::qifs_entropy;
use qifs_core::SimConfig;

fn eigen(c: &mut Criterion) {
    let (h, v) = elementary_pair();
    let cfg = SolveConfig::default();
    c.bench_function("ruelle_eigen_2x2", |b| b.iter(|| solve_ruelle_eigen(black_box(&h), black_box(&v), &cfg).unwrap()));
}

fn fixed_point(c: &mut Criterion) {
    let cfg = SolveConfig::default();
    let mut g = c.benchmark_group("lambda_fixed_point");
    for dim in [2, 4, 8] {
        let m = random_model(dim, 3, 7);
        g.bench_function(format!("dim{dim}"), |b| b.iter(|| solve_lambda_fixed_point(black_box(&m), &cfg).unwrap()));
    }
    g.finish();
}

fn entropy(c: &mut Criterion) {
    let m = random_model(2, 3, 11);
    let rho = solve_lambda_fixed_point(&m, &SolveConfig::default()).unwrap().rho;
    c.bench_function("qifs_entropy", |b| b.iter(|| qifs_entropy(black_box(&m), black_box(&rho)).unwrap()));
    let mut g = c.benchmark_group("iterated_dual_entropy");
    for n in [2, 4, 6] {
        g.bench_function(format!("n{n}"), |b| b.iter(|| m.iterated_dual_entropy(black_box(&rho), n).unwrap()));
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let m = random_model(2, 3, 13);
    let cfg = SimConfig { samples: 10_000, burn_in: 100, ..SimConfig::new(1) };
    let mut g = c.benchmark_group("sim");
    g.sample_size(10);
    g.bench_function("barycenter_1e4", |b| b.iter(|| qifs_core::sim::estimate_barycenter(black_box(&m), &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, eigen, fixed_point, entropy, sampling);
criterion_main!(benches);
