use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use curve_impact::affine::riccati_solve;
use curve_impact::curve::simulate_impacted_curve;
use curve_impact::execution::{brute_force_qp, coefficient_table, solve_execution};
use curve_impact::short_rate::AffineTables;
use curve_impact::{PsiForm, Table1D, TimeGrid};
use curve_impact_bench::{curve_experiment, execution_problem};

fn curve(c: &mut Criterion) {
    let cfg = curve_experiment(1000, 90).unwrap();
    c.bench_function("curve_experiment_1000x90", |b| b.iter(|| simulate_impacted_curve(black_box(&cfg)).unwrap()));
}

fn execution(c: &mut Criterion) {
    let p = execution_problem().unwrap();
    let grid = TimeGrid::new(0.0, p.tau, 500).unwrap();
    c.bench_function("coefficient_table_500", |b| b.iter(|| coefficient_table(black_box(&p), 500, PsiForm::Propagator).unwrap()));
    c.bench_function("solve_execution_500", |b| b.iter(|| solve_execution(black_box(&p), &grid).unwrap()));
    c.bench_function("brute_force_qp_200", |b| b.iter(|| brute_force_qp(black_box(&p), 200).unwrap()));
}

fn riccati(c: &mut Criterion) {
    let h = 10.0;
    let k = |v: f64| Table1D::constant(v, 0.0, h).unwrap();
    let tables = AffineTables { a: k(0.0025), alpha: k(0.0), b: k(0.02), beta: k(-0.2) };
    let grid = TimeGrid::new(0.0, h, 2000).unwrap();
    c.bench_function("riccati_10y_2000", |b| b.iter(|| riccati_solve(black_box(&tables), h, &grid).unwrap()));
}

criterion_group!(benches, curve, execution, riccati);
criterion_main!(benches);
