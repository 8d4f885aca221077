//! Independent eigenvalue oracles for the integration tests.
//!
//! Both deliberately avoid the production eigensolver: the tridiagonal
//! path uses Sturm-sequence bisection, the dense path a cyclic complex
//! Jacobi iteration. Each is self-certifying (bisection brackets by
//! construction; Jacobi preserves the Frobenius norm and reports its
//! residual off-diagonal mass), so agreement with the production solver
//! is a genuine cross-check rather than a tautology.

// Each test target pulls in this module separately and uses a subset.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Number of eigenvalues of the symmetric tridiagonal below `x`.
///
/// Standard Sturm count from the shifted LDL^T recurrence; division by a
/// zero pivot is deflected by a tiny offset, which cannot change the
/// count by more than the (measure-zero) boundary case.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let n = diag.len();
    let mut count = 0usize;
    let mut d = 1.0f64;
    for i in 0..n {
        let off2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        d = diag[i] - x - off2 / d;
        if d == 0.0 {
            d = 1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k` lowest eigenvalues of a real symmetric tridiagonal matrix
/// (diagonal `diag`, first off-diagonal `off`) by bisection.
pub fn sturm_lowest(diag: &[f64], off: &[f64], k: usize) -> Vec<f64> {
    let n = diag.len();
    assert!(off.len() + 1 == n && k <= n, "inconsistent tridiagonal");
    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, &d) in diag.iter().enumerate() {
        let r = off.get(i.wrapping_sub(1)).map_or(0.0, |v| v.abs())
            + off.get(i).map_or(0.0, |v| v.abs());
        lo = lo.min(d - r);
        hi = hi.max(d + r);
    }
    (0..k)
        .map(|j| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..120 {
                let mid = 0.5 * (a + b);
                if sturm_count(diag, off, mid) > j {
                    b = mid;
                } else {
                    a = mid;
                }
                if b - a <= f64::EPSILON * (a.abs().max(b.abs()) + 1.0) {
                    break;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Full spectrum of a Hermitian matrix by cyclic complex Jacobi sweeps.
///
/// Returns the eigenvalues sorted ascending together with the remaining
/// off-diagonal Frobenius mass, which bounds the eigenvalue error (Weyl).
pub fn jacobi_hermitian_eigenvalues(a: &DMatrix<Complex64>) -> (Vec<f64>, f64) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut m = a.clone();
    let scale = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    let tol = 1e-14 * scale;

    for _sweep in 0..60 {
        let mut off2 = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off2 += m[(p, q)].norm_sqr();
            }
        }
        if (2.0 * off2).sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= tol / (n as f64) {
                    continue;
                }
                let phase = apq / mag;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                // The annihilation condition is t^2 - 2 tau t - 1 = 0;
                // this is its smaller root, written cancellation-free.
                let tau = (aqq - app) / (2.0 * mag);
                let t = -tau.signum_or_one() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // Column update: col_p <- c col_p + s conj(phase) col_q,
                // col_q <- -s phase col_p + c col_q, then the mirrored
                // row update; derived so the (p, q) element vanishes.
                for r in 0..n {
                    let mrp = m[(r, p)];
                    let mrq = m[(r, q)];
                    m[(r, p)] = mrp * c + mrq * s * phase.conj();
                    m[(r, q)] = mrq * c - mrp * s * phase;
                }
                for r in 0..n {
                    let mpr = m[(p, r)];
                    let mqr = m[(q, r)];
                    m[(p, r)] = mpr * c + mqr * s * phase;
                    m[(q, r)] = mqr * c - mpr * s * phase.conj();
                }
                // Restore exact Hermitian structure against roundoff; the
                // rotated (p, q) element is kept as-is so the returned
                // off-diagonal mass stays an honest certificate.
                m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
                let z = 0.5 * (m[(p, q)] + m[(q, p)].conj());
                m[(p, q)] = z;
                m[(q, p)] = z.conj();
            }
        }
    }

    let mut off2 = 0.0f64;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                off2 += m[(p, q)].norm_sqr();
            }
        }
    }
    let mut evals: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    evals.sort_by(f64::total_cmp);
    (evals, off2.sqrt())
}

trait SignumOrOne {
    fn signum_or_one(self) -> f64;
}

impl SignumOrOne for f64 {
    fn signum_or_one(self) -> f64 {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}
