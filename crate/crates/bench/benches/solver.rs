use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tfc_bench::fixture;
use tfc_core::pde_solver::least_squares;
use tfc_core::problems::ProblemId;
use tfc_core::{cgl_nodes, eval_basis, BasisKind};

fn basis(c: &mut Criterion) {
    let mut group = c.benchmark_group("eval_basis");
    let z = cgl_nodes(99).unwrap();
    for kind in [BasisKind::ChebyshevFirstKind, BasisKind::Legendre] {
        for d in [0, 2] {
            group.bench_with_input(
                BenchmarkId::new(kind.name(), format!("deg25_d{d}")),
                &d,
                |b, &d| b.iter(|| eval_basis(kind, 25, d, black_box(&z)).unwrap()),
            );
        }
    }
    group.finish();
}

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assembly");
    group.sample_size(20);
    for (id, n, m) in [
        (ProblemId::Problem1, 15, 15),
        (ProblemId::Problem1, 25, 25),
        (ProblemId::Problem2, 20, 20),
    ] {
        let f = fixture(id, BasisKind::ChebyshevFirstKind, n, m);
        group.bench_function(format!("{id}_n{n}_m{m}"), |b| b.iter(|| f.linearize()));
    }
    group.finish();
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("least_squares");
    group.sample_size(20);
    for (n, m) in [(15, 15), (20, 20), (30, 25)] {
        let (a, rhs) = fixture(ProblemId::Problem1, BasisKind::ChebyshevFirstKind, n, m).system();
        group.bench_function(format!("problem1_n{n}_m{m}"), |b| {
            b.iter(|| least_squares(black_box(&a), &rhs).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, basis, assembly, solve);
criterion_main!(benches);
