//! Parallel against sequential on the three heaviest data-parallel loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mustring::bogoliubov::{beta_matrix, exp_modes, Embedding, EndCondition};
use mustring::model::{derive_constants, StringParams};
use mustring::mu_space::{inner_mu, MuFunction};
use mustring::par;
use mustring::quadrature::Quadrature;
use mustring::spectrum::{find_modes, mode_functions};

const PATHS: [(&str, bool); 2] = [("sequential", true), ("parallel", false)];

fn params() -> StringParams {
    StringParams { m0: 0.5, ml: 0.5, k0: 0.2, kl: 0.2, ..Default::default() }
}

fn bench_find_modes(c: &mut Criterion) {
    let d = derive_constants(&params()).unwrap();
    let mut g = c.benchmark_group("find_modes_10000");
    for (name, seq) in PATHS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::force_sequential(seq);
            b.iter(|| find_modes(&d.ratios, 10_000).unwrap())
        });
    }
    g.finish();
}

fn bench_gram(c: &mut Criterion) {
    let d = derive_constants(&params()).unwrap();
    let table = find_modes(&d.ratios, 20).unwrap();
    let n = table.len();
    let q = Quadrature::with_tol(1e-12).for_frequency(2.0 * table.modes[n - 1].omega, 0.0, d.ell());
    let hats: Vec<MuFunction> = table.modes.iter().map(|m| mode_functions(m, &d).1).collect();
    let mut g = c.benchmark_group("gram_20");
    for (name, seq) in PATHS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::force_sequential(seq);
            b.iter(|| par::map_range(n * n, |k| inner_mu(&hats[k / n], &hats[k % n], &d, &q).unwrap()))
        });
    }
    g.finish();
}

fn bench_beta(c: &mut Criterion) {
    let ms = exp_modes([EndCondition::Dirichlet; 2], 20, 1.0).unwrap();
    let (xi, xf) = (Embedding::flat(1.0, 0.0), Embedding::tilted(1.0, 0.3));
    let q = Quadrature::with_tol(1e-10);
    let mut g = c.benchmark_group("beta_matrix_20");
    g.sample_size(10);
    for (name, seq) in PATHS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::force_sequential(seq);
            b.iter(|| beta_matrix(&ms, &xi, &xf, 20, &q).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_find_modes, bench_gram, bench_beta);
criterion_main!(benches);
