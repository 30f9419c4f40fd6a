use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use cgad::bec::{certify_morse_index, cgad_step, solve_excited_state, SolverSettings};
use cgad::GridField;
use cgad_bench::{box_1d, lattice_2d};

fn steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("cgad_step");
    for k in [0, 1, 3, 9] {
        let (p, s) = box_1d(31, 100.0, k);
        group.bench_with_input(BenchmarkId::new("box_1d", k), &s, |b, s| b.iter(|| cgad_step(&p, black_box(s), 0.001).unwrap()));
    }
    for n in [63, 159] {
        let (p, s) = lattice_2d(n, 50.0);
        group.bench_with_input(BenchmarkId::new("lattice_2d", n), &s, |b, s| b.iter(|| cgad_step(&p, black_box(s), 0.01).unwrap()));
    }
    group.finish();
}

fn solves(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let (p, s) = box_1d(31, 100.0, 2);
    let settings = SolverSettings::new(0.005, 1e-12, 100_000);
    group.bench_function("box_1d_k2_beta100", |b| b.iter(|| solve_excited_state(&p, black_box(&s), &settings).unwrap()));
    let record = solve_excited_state(&p, &s, &settings).unwrap();
    let phi: GridField = record.phi;
    group.bench_function("certify_box_1d_k2", |b| b.iter(|| certify_morse_index(&p, black_box(&phi), 2).unwrap()));
    group.finish();
}

criterion_group!(benches, steps, solves);
criterion_main!(benches);
