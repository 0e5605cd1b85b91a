use std::f64::consts::PI;

use adiabat_core::{couplings, herm_eig, propagate, CouplingRoute, EigenFrame, Grid, SpinHalf};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_propagate(c: &mut Criterion) {
    let h = SpinHalf::new(PI / 4.0, 1.0).hamiltonian();
    let tau = SpinHalf::tau_for_omega(0.01);
    let mut group = c.benchmark_group("propagate");
    for n in [2_049, 16_385] {
        let grid = Grid::new(0.0, 2.0 * PI, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, g| {
            b.iter(|| propagate(&h, tau, black_box(g)).unwrap())
        });
    }
    group.finish();
}

fn bench_frame(c: &mut Criterion) {
    let h = SpinHalf::new(PI / 4.0, 1.0).hamiltonian();
    let tau = SpinHalf::tau_for_omega(0.01);
    let grid = Grid::new(0.0, 2.0 * PI, 4_097).unwrap();
    c.bench_function("eigenframe_4097", |b| {
        b.iter(|| {
            let f = EigenFrame::build(&h, tau, black_box(&grid)).unwrap();
            couplings(&f, CouplingRoute::HellmannFeynman).unwrap()
        })
    });
}

fn bench_eig(c: &mut Criterion) {
    let mut group = c.benchmark_group("herm_eig");
    for n in [2usize, 4, 8] {
        let m = adiabat_core::ComplexMatrix::from_fn(n, n, |i, j| {
            let (a, b) = (i.min(j) as f64, i.max(j) as f64);
            let re = (a + 2.0 * b).cos();
            let im = if i == j { 0.0 } else { (a - b).sin() * if i < j { 1.0 } else { -1.0 } };
            adiabat_core::C64::new(re, im)
        });
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| b.iter(|| herm_eig(black_box(m)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_propagate, bench_frame, bench_eig);
criterion_main!(benches);
