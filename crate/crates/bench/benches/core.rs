use criterion::{black_box, criterion_group, criterion_main, Criterion};
use lpkit_core::atoms::{build_atom, verify_atom, AtomTolerances, Ball, Shape};
use lpkit_core::kernel::{builtin, check_cancellation, default_delta_grid, omega2, ModulusMeta};
use lpkit_core::operators::{evaluate, OperatorParams, OperatorTag};
use lpkit_core::quad::QuadPlan;

fn kernel(c: &mut Criterion) {
    let k = builtin("circle-harmonic-1").unwrap();
    c.bench_function("cancellation/order-64", |b| b.iter(|| check_cancellation(black_box(&k), 64)));
    let grid = default_delta_grid(40, 2.0);
    let meta = ModulusMeta::new(2);
    c.bench_function("omega2/40-deltas", |b| b.iter(|| omega2(&k, black_box(&grid), &meta).unwrap()));
}

fn atoms(c: &mut Criterion) {
    let ball = Ball::new(&[0.3, -0.2], 0.5);
    c.bench_function("atom/build-s2", |b| b.iter(|| build_atom(2, 0.6, ball.clone(), &Shape::radial_bump(), 2).unwrap()));
    let a = build_atom(2, 1.0, ball, &Shape::radial_bump(), 1).unwrap();
    c.bench_function("atom/verify", |b| b.iter(|| verify_atom(black_box(&a), &AtomTolerances::default())));
}

fn operators(c: &mut Criterion) {
    let k = builtin("circle-harmonic-1").unwrap();
    let f = build_atom(2, 1.0, Ball::new(&[0.0, 0.0], 1.0), &Shape::radial_bump(), 1).unwrap().source();
    let params = OperatorParams::operator_only(2, 1.5, 3.0).unwrap();
    let plan = QuadPlan::default();
    let mut g = c.benchmark_group("operators");
    g.sample_size(10);
    for (name, tag) in [("mu_s", OperatorTag::Area), ("mu_star", OperatorTag::Star)] {
        for d in [2.0, 64.0] {
            g.bench_function(format!("{name}/d-{d}"), |b| b.iter(|| evaluate(tag, &k, &f, black_box(&[d, 0.0]), &params, &plan).unwrap()));
        }
    }
    g.finish();
}

criterion_group!(benches, kernel, atoms, operators);
criterion_main!(benches);
