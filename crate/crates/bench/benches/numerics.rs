//! Benchmarks for the numeric kernels the fitters lean on: the gamma
//! special functions (both evaluation branches of the regularized lower
//! incomplete gamma) and the simplex optimizer.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use relgrow_core::numerics::optimize::nelder_mead;
use relgrow_core::numerics::special::{gamma_fn, ln_gamma, reg_inc_gamma_lower};

fn special_functions(c: &mut Criterion) {
    let mut group = c.benchmark_group("special");
    group.bench_function("gamma_fn", |b| {
        b.iter(|| gamma_fn(black_box(4.7)).expect("in domain"))
    });
    group.bench_function("ln_gamma", |b| {
        b.iter(|| ln_gamma(black_box(250.3)).expect("in domain"))
    });
    // x < a + 1 takes the series branch; x well above a + 1 takes the
    // continued-fraction branch. Both sit on the chi-square/gamma-cdf
    // hot path during fitting.
    group.bench_function("reg_inc_gamma_lower_series", |b| {
        b.iter(|| reg_inc_gamma_lower(black_box(5.0), black_box(2.0)).expect("in domain"))
    });
    group.bench_function("reg_inc_gamma_lower_contfrac", |b| {
        b.iter(|| reg_inc_gamma_lower(black_box(5.0), black_box(12.0)).expect("in domain"))
    });
    group.finish();
}

fn optimizer(c: &mut Criterion) {
    let mut group = c.benchmark_group("optimize");
    // Rosenbrock's valley: a standard curved-ridge stress test whose
    // shape mimics the correlated log-parameter surfaces the fitters
    // hand to the simplex.
    let rosenbrock =
        |p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
    group.bench_function("nelder_mead_rosenbrock", |b| {
        b.iter(|| nelder_mead(rosenbrock, black_box(&[-1.2, 1.0]), 1e-10, 5000))
    });
    group.finish();
}

criterion_group!(benches, special_functions, optimizer);
criterion_main!(benches);
