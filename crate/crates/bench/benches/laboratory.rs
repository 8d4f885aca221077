//! End-to-end timings for the numerical hot paths.
//!
//! The spectral pipeline is dominated by the dense Hermitian eigensolve at
//! dimension `2 (2 n_charge + 1)` = 162, so the sweep benchmarks are sized
//! to stay in the seconds range: assembly and a single eigensolve run at the
//! production basis, the multi-point sweep at a reduced one.

use std::hint::black_box;

use asqlab_core::{
    build_joint_hamiltonian, coupling_strengths, dwell_times, fit, linspace, simulate_telegraph,
    solve_circuit, sweep_flux, zeeman_from_field, BasisSpec, CircuitParams, Model, TelegraphSpec,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn reference() -> (CircuitParams, BasisSpec) {
    let mut params = CircuitParams::reference_device();
    params.zeeman = zeeman_from_field(28.0, 12.7, 0.6213);
    params.phi_ext = 1.2;
    (params, BasisSpec::default())
}

fn bench_hamiltonian(c: &mut Criterion) {
    let (params, basis) = reference();
    c.bench_function("hamiltonian_assembly_dim162", |b| {
        b.iter(|| build_joint_hamiltonian(black_box(&params), black_box(&basis)).unwrap())
    });
}

fn bench_eigensolve(c: &mut Criterion) {
    let (params, basis) = reference();
    let mut group = c.benchmark_group("spectrum");
    group.sample_size(20);
    group.bench_function("solve_and_label_dim162_k6", |b| {
        b.iter(|| solve_circuit(black_box(&params), black_box(&basis), 6).unwrap())
    });
    group.finish();
}

fn bench_flux_sweep(c: &mut Criterion) {
    let (params, _) = reference();
    let basis = BasisSpec { n_charge: 14, ..BasisSpec::default() };
    let grid = linspace(0.0, std::f64::consts::TAU, 21);
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("flux_21pts_dim58_k6", |b| {
        b.iter(|| sweep_flux(black_box(&params), black_box(&basis), black_box(&grid), 6).unwrap())
    });
    group.finish();
}

fn bench_coupling(c: &mut Criterion) {
    let (params, _) = reference();
    c.bench_function("coupling_closed_forms", |b| {
        b.iter(|| coupling_strengths(black_box(&params)).unwrap())
    });
}

fn bench_fit(c: &mut Criterion) {
    let xs = linspace(0.0, 20.0, 161);
    let ys: Vec<f64> =
        xs.iter().map(|&t| 0.8 * (-t / 9.0).exp() * (2.4 * t + 0.3).cos() + 0.1).collect();
    c.bench_function("fit_ramsey_161pts", |b| {
        b.iter(|| fit(&Model::Ramsey, black_box(&xs), black_box(&ys), None, None).unwrap())
    });
}

fn bench_telegraph(c: &mut Criterion) {
    let spec = TelegraphSpec {
        dwell_a_us: 59.0,
        dwell_b_us: 2800.0,
        level_a: 1.0,
        level_b: 0.0,
        noise_sigma: 0.1,
        dt_us: 4.3,
        duration_s: 1.0,
        rng_seed: 7,
    };
    let trace = simulate_telegraph(&spec).unwrap();
    let mut group = c.benchmark_group("telegraph");
    group.bench_function("simulate_one_second", |b| {
        b.iter(|| simulate_telegraph(black_box(&spec)).unwrap())
    });
    group.bench_function("dwell_times_one_second", |b| {
        b.iter(|| dwell_times(black_box(&trace), 0.5).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_hamiltonian,
    bench_eigensolve,
    bench_flux_sweep,
    bench_coupling,
    bench_fit,
    bench_telegraph
);
criterion_main!(benches);
