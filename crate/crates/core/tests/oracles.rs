//! Cross-checks of the production eigensolver against independent
//! algorithms: Sturm bisection for the spinless tridiagonal block and a
//! cyclic complex Jacobi iteration for dense joint Hamiltonians.

mod common;

use asqlab_core::{
    build_joint_hamiltonian, diagonalize, solve_circuit, BasisSpec, CircuitParams, Gauge,
    ZeemanField,
};
use common::{jacobi_hermitian_eigenvalues, sturm_lowest};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(rng.random_range(-3.0..3.0), 0.0);
        for j in (i + 1)..n {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

#[test]
fn jacobi_oracle_is_self_certifying() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0a11ce);
    for _ in 0..5 {
        let a = random_hermitian(24, &mut rng);
        let trace: f64 = (0..24).map(|i| a[(i, i)].re).sum();
        let frob2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        let (evals, off) = jacobi_hermitian_eigenvalues(&a);

        // Unitary similarity preserves the trace and the Frobenius norm;
        // the residual off-diagonal mass bounds the eigenvalue error.
        assert!(off < 1e-10, "jacobi residual {off}");
        let ev_sum: f64 = evals.iter().sum();
        let ev_frob2: f64 = evals.iter().map(|e| e * e).sum();
        assert!((ev_sum - trace).abs() < 1e-9 * trace.abs().max(1.0));
        assert!((ev_frob2 - frob2).abs() < 1e-8 * frob2.max(1.0));
    }
}

#[test]
fn production_solver_matches_jacobi_on_joint_hamiltonians() {
    let cases = [
        (CircuitParams::reference_device(), Gauge::FluxOnDot),
        (
            CircuitParams::reference_device()
                .with_phi_ext(1.1)
                .with_zeeman(ZeemanField { magnitude: 4.98, theta: 0.62 }),
            Gauge::FluxOnDot,
        ),
        (
            CircuitParams::reference_device()
                .with_phi_ext(4.4)
                .with_zeeman(ZeemanField { magnitude: 11.5, theta: 2.1 }),
            Gauge::FluxOnReference,
        ),
        (
            CircuitParams {
                e_c: 0.45,
                e_j: 7.3,
                e_0: 0.4,
                e_so: 0.5,
                ..CircuitParams::reference_device().with_phi_ext(2.7)
            },
            Gauge::FluxOnReference,
        ),
    ];
    for (params, gauge) in cases {
        let basis = BasisSpec { n_charge: 12, gauge };
        let h = build_joint_hamiltonian(&params, &basis).unwrap();
        let dim = h.nrows();
        let (energies, _) = diagonalize(&h, dim).unwrap();
        let (oracle, off) = jacobi_hermitian_eigenvalues(&h);
        assert!(off < 1e-9, "jacobi residual {off}");
        let scale = oracle.iter().fold(1.0f64, |m, e| m.max(e.abs()));
        for (a, b) in energies.iter().zip(&oracle) {
            assert!(
                (a - b).abs() <= 1e-10 * scale + off,
                "solver {a} vs oracle {b} (scale {scale})"
            );
        }
    }
}

#[test]
fn transmon_block_matches_sturm_bisection() {
    // With the spin-dependent terms off the joint spectrum is the
    // spinless tridiagonal spectrum, each level doubled.
    let params = CircuitParams {
        e_0: 0.0,
        e_so: 0.0,
        ..CircuitParams::reference_device().with_zeeman(ZeemanField::zero())
    };
    let n_charge = 30usize;
    let basis = BasisSpec { n_charge, gauge: Gauge::FluxOnDot };
    let solution = solve_circuit(&params, &basis, 12).unwrap();

    let side = 2 * n_charge + 1;
    let diag: Vec<f64> = (0..side)
        .map(|i| {
            let n = i as f64 - n_charge as f64;
            4.0 * params.e_c * n * n
        })
        .collect();
    let off = vec![-params.e_j / 2.0; side - 1];
    let oracle = sturm_lowest(&diag, &off, 6);

    for (pair, expected) in solution.energies.chunks(2).zip(&oracle) {
        let scale = expected.abs().max(1.0);
        assert!(
            (pair[0] - expected).abs() <= 1e-8 * scale,
            "lower of pair {} vs {expected}",
            pair[0]
        );
        assert!(
            (pair[1] - expected).abs() <= 1e-8 * scale,
            "upper of pair {} vs {expected}",
            pair[1]
        );
    }
}

#[test]
fn charge_basis_truncation_is_converged_at_default_size() {
    let params = CircuitParams::reference_device()
        .with_phi_ext(1.9)
        .with_zeeman(ZeemanField { magnitude: 4.98, theta: 0.62 });
    let coarse =
        solve_circuit(&params, &BasisSpec { n_charge: 40, gauge: Gauge::FluxOnDot }, 10).unwrap();
    let fine =
        solve_circuit(&params, &BasisSpec { n_charge: 80, gauge: Gauge::FluxOnDot }, 10).unwrap();
    for (a, b) in coarse.energies.iter().zip(&fine.energies) {
        assert!((a - b).abs() < 1e-8, "truncation drift {a} vs {b}");
    }
}
