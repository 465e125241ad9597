use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use halfcurve::arith::padic::slope_factorization;
use halfcurve::arith::Poly;
use halfcurve::dirichlet::{quadratic, DirichletChar};
use halfcurve::hecke::{charpoly, u_ell_integral, u_ellsq_half};
use halfcurve::qseries::{theta, theta_psi};
use halfcurve::spaces::{build_space, space_precision};
use halfcurve::Rational;
use halfcurve_bench::{half_fixture, integral_fixture};

fn series(c: &mut Criterion) {
    c.bench_function("theta^9 to 4000 terms", |b| b.iter(|| black_box(theta(4000)).pow(9)));
    let psi = quadratic(-3);
    c.bench_function("theta_psi to 40000 terms", |b| b.iter(|| theta_psi(black_box(&psi), 40_000).unwrap()));
}

fn spaces(c: &mut Criterion) {
    let mut g = c.benchmark_group("spaces");
    g.sample_size(10);
    g.bench_function("S_5/2(20)", |b| {
        let chi = DirichletChar::trivial(20);
        b.iter(|| build_space(5, 20, &chi, true, space_precision(5, 20, 25)).unwrap())
    });
    g.bench_function("S_4(30)", |b| {
        let chi = DirichletChar::trivial(30);
        b.iter(|| build_space(8, 30, &chi, true, space_precision(8, 30, 5)).unwrap())
    });
    g.finish();
}

fn hecke(c: &mut Criterion) {
    let half = half_fixture();
    let int = integral_fixture();
    c.bench_function("U(25) on S_5/2(20)", |b| b.iter(|| u_ellsq_half(black_box(&half), 5).unwrap()));
    c.bench_function("U(5) on S_4(30)", |b| b.iter(|| u_ell_integral(black_box(&int), 5).unwrap()));
    let u = u_ell_integral(&int, 5).unwrap();
    c.bench_function("Fredholm determinant of U(5)", |b| b.iter(|| charpoly(black_box(&u), true).unwrap()));
}

fn slopes(c: &mut Criterion) {
    // (1 − 5x)(1 − 25x)(1 − 3x)(1 − 125x)(1 − 7x²)
    let f = [5i64, 25, 3, 125].iter().fold(Poly::<Rational>::from_ints(&[1, 0, -7]), |acc, &a| {
        acc.mul(&Poly::from_ints(&[1, -a]))
    });
    c.bench_function("slope factorization, degree 6", |b| {
        b.iter(|| slope_factorization(black_box(&f), 5).unwrap())
    });
}

criterion_group!(kernels, series, spaces, hecke, slopes);
criterion_main!(kernels);
