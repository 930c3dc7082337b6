//! Benchmarks for the hot paths: brackets, slice assembly, cohomology.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use liext_core::cohomology::{double_cohomology, mu_cohomology, triple_cohomology};
use liext_core::{Cochain, GradedSpace, ImageMode, ParamSet, Scalar};

fn five_dim() -> Arc<GradedSpace> {
    Arc::new(GradedSpace::purely_odd_split(3, 5))
}

fn q(n: i64) -> Scalar {
    Scalar::from_int(n)
}

/// The twisted 5-dim extension: delta + mu + lambda + psi at a16 = 0,
/// a19 = 1, with a unit twist.
fn twisted_five(space: &Arc<GradedSpace>) -> (Cochain, Cochain, Cochain) {
    let mu = Cochain::from_terms(space, vec![(vec![1, 2], 0, q(1)), (vec![1, 2], 1, q(1))])
        .unwrap();
    let dl = Cochain::from_terms(
        space,
        vec![
            (vec![3, 4], 3, q(1)),
            (vec![0, 4], 0, q(1)),
            (vec![1, 4], 1, q(1)),
            (vec![2, 4], 0, q(1)),
        ],
    )
    .unwrap();
    let psi = Cochain::term(space, &[3, 4], 0, q(1)).unwrap();
    (mu, dl, psi)
}

fn bench_bracket_numeric(c: &mut Criterion) {
    let space = five_dim();
    let (mu, dl, psi) = twisted_five(&space);
    let total = mu.add(&dl).unwrap().add(&psi).unwrap();
    c.bench_function("bracket numeric 5-dim", |b| {
        b.iter(|| black_box(&total).bracket(black_box(&total)).unwrap())
    });
}

fn bench_bracket_symbolic(c: &mut Criterion) {
    let space = five_dim();
    let params = ParamSet::new(vec!["c11", "c21", "c31", "c12", "c22", "c32"]).unwrap();
    let v = |n: &str| Scalar::var(&params, n).unwrap();
    let (mu, dl, _) = twisted_five(&space);
    let op = mu.add(&dl).unwrap();
    let beta = Cochain::from_terms(
        &space,
        vec![
            (vec![3], 0, v("c11")),
            (vec![3], 1, v("c21")),
            (vec![3], 2, v("c31")),
            (vec![4], 0, v("c12")),
            (vec![4], 1, v("c22")),
            (vec![4], 2, v("c32")),
        ],
    )
    .unwrap();
    c.bench_function("bracket symbolic 5-dim", |b| {
        b.iter(|| black_box(&op).bracket(black_box(&beta)).unwrap())
    });
}

fn bench_double_cohomology(c: &mut Criterion) {
    let space = five_dim();
    let (mu, dl, _) = twisted_five(&space);
    c.bench_function("double cohomology 5-dim (0,2)", |b| {
        b.iter(|| double_cohomology(black_box(&mu), black_box(&dl), 0, 2, ImageMode::Extended).unwrap())
    });
}

fn bench_triple_cohomology(c: &mut Criterion) {
    let space = five_dim();
    let (mu, dl, psi) = twisted_five(&space);
    c.bench_function("triple cohomology 5-dim (0,2)", |b| {
        b.iter(|| triple_cohomology(black_box(&mu), black_box(&dl), black_box(&psi), 0, 2).unwrap())
    });
}

/// Wide slice on an 8-dim space keeps the eliminator busy.
fn bench_elimination(c: &mut Criterion) {
    let space = Arc::new(GradedSpace::purely_odd_split(4, 8));
    let mu = Cochain::from_terms(
        &space,
        vec![
            (vec![0, 1], 2, q(1)),
            (vec![0, 2], 1, q(1)),
            (vec![1, 2], 0, q(1)),
        ],
    )
    .unwrap();
    c.bench_function("mu cohomology 8-dim (1,1)", |b| {
        b.iter(|| mu_cohomology(black_box(&mu), 1, 1).unwrap())
    });
}

criterion_group!(
    benches,
    bench_bracket_numeric,
    bench_bracket_symbolic,
    bench_double_cohomology,
    bench_triple_cohomology,
    bench_elimination
);
criterion_main!(benches);
