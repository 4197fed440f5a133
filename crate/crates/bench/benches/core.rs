use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use densilab::lattice::scan;
use densilab::{decide_equivalence, decompose, density_ratio, power, ExpansiveMap, Region, SymMatrix, DEFAULT_TOL};

/// Symmetric matrix with a spread spectrum: tridiagonal `k + 2` on the
/// diagonal and `0.5` off it.
fn tridiagonal(d: usize) -> SymMatrix {
    let rows: Vec<Vec<f64>> = (0..d)
        .map(|r| {
            (0..d)
                .map(|c| match r.abs_diff(c) {
                    0 => r as f64 + 2.0,
                    1 => 0.5,
                    _ => 0.0,
                })
                .collect()
        })
        .collect();
    SymMatrix::from_rows(&rows).unwrap()
}

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("decompose");
    for d in [2, 4, 8, 16] {
        let a = tridiagonal(d);
        g.bench_with_input(BenchmarkId::from_parameter(d), &a, |b, a| {
            b.iter(|| decompose(black_box(a), DEFAULT_TOL).unwrap())
        });
    }
    g.finish();

    let a = tridiagonal(4);
    let a2 = power(&a, 1.7).unwrap();
    c.bench_function("decide_equivalence/4", |b| {
        b.iter(|| decide_equivalence(black_box(&a), black_box(&a2), DEFAULT_TOL).unwrap())
    });
}

fn density(c: &mut Criterion) {
    let map = ExpansiveMap::from_sym(&SymMatrix::diagonal(&[2.0, 4.0])).unwrap();
    let set = Region::e_alpha(2.0).unwrap();
    let window = Region::cube(2, 1.0).unwrap();
    let mut g = c.benchmark_group("density_ratio");
    g.sample_size(20);
    for samples in [16_384u64, 262_144] {
        g.bench_with_input(BenchmarkId::from_parameter(samples), &samples, |b, &n| {
            b.iter(|| density_ratio(&set, &map, 4, &window, n, 0).unwrap())
        });
    }
    g.finish();
}

fn lattice(c: &mut Criterion) {
    let mut g = c.benchmark_group("scan");
    g.sample_size(10);
    for bound in [2i64, 3] {
        g.bench_with_input(BenchmarkId::from_parameter(bound), &bound, |b, &n| b.iter(|| scan(n, 10, 12)));
    }
    g.finish();
}

criterion_group!(benches, spectral, density, lattice);
criterion_main!(benches);
