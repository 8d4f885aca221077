//! Closed-form perturbative estimates of the spin-transmon coupling.
//!
//! Treating the weak junction as a perturbation on the transmon and
//! expanding its spin-dependent term to first order in the phase
//! zero-point fluctuation yields flux-dependent transverse and
//! longitudinal coupling rates between the spin and the transmon mode:
//!
//! ```text
//! E_J_eff(phi_ext) = (E_J + E_0) sqrt(cos^2 phi_ext + d^2 sin^2 phi_ext),
//!                    d = (E_J - E_0) / (E_J + E_0)
//! phi_zpf          = (2 E_c / E_J_eff)^(1/4)
//! j_transverse     = E_SO cos(phi_ext) phi_zpf cos(theta)
//! j_longitudinal   = E_SO cos(phi_ext) phi_zpf sin(theta)
//! ```
//!
//! The quadrature sum of the two rates is `E_SO cos(phi_ext) phi_zpf`
//! independent of the field angle. The zeroth-order term
//! `E_SO sin(phi_ext)` does not involve the transmon mode at all; it is a
//! static spin splitting contribution and is exposed separately.

use nalgebra::Matrix2;
use thiserror::Error;

use crate::circuit::CircuitParams;

/// Errors raised by the closed-form estimates.
#[derive(Debug, Error)]
pub enum CouplingError {
    /// The effective Josephson energy vanished; no oscillator mode exists
    /// and the zero-point fluctuation is undefined.
    #[error("effective Josephson energy is zero at phi_ext = {phi_ext}")]
    NoJosephsonEnergy { phi_ext: f64 },
    /// A parameter was NaN or infinite.
    #[error("parameters must be finite")]
    NonFinite,
}

/// Flux-dependent effective Josephson energy of the two-junction loop.
pub fn ej_eff(params: &CircuitParams) -> f64 {
    let sum = params.e_j + params.e_0;
    if sum == 0.0 {
        return 0.0;
    }
    let asym = (params.e_j - params.e_0) / sum;
    let (sin, cos) = params.reduced_phi_ext().sin_cos();
    sum * (cos * cos + asym * asym * sin * sin).sqrt()
}

/// Phase zero-point fluctuation `(2 E_c / E_J_eff)^(1/4)`.
pub fn phi_zpf(params: &CircuitParams) -> Result<f64, CouplingError> {
    let ej = ej_eff(params);
    if !(ej.is_finite() && params.e_c.is_finite()) {
        return Err(CouplingError::NonFinite);
    }
    if ej <= 0.0 {
        return Err(CouplingError::NoJosephsonEnergy { phi_ext: params.reduced_phi_ext() });
    }
    Ok((2.0 * params.e_c / ej).powf(0.25))
}

/// First-order coupling rates between the spin and the transmon mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingEstimate {
    /// Effective Josephson energy at the bias point (GHz).
    pub ej_eff: f64,
    /// Phase zero-point fluctuation (dimensionless).
    pub phi_zpf: f64,
    /// Transverse (spin-flipping) coupling rate (GHz), signed.
    pub j_transverse: f64,
    /// Longitudinal (spin-preserving) coupling rate (GHz), signed.
    pub j_longitudinal: f64,
    /// Static spin-splitting term `E_SO sin(phi_ext)` (GHz), not mediated
    /// by the transmon mode.
    pub static_spin_shift: f64,
}

/// Evaluates all closed-form coupling quantities at the bias point.
pub fn coupling_strengths(params: &CircuitParams) -> Result<CouplingEstimate, CouplingError> {
    params.validate().map_err(|_| CouplingError::NonFinite)?;
    let zpf = phi_zpf(params)?;
    let (sin_phi, cos_phi) = params.reduced_phi_ext().sin_cos();
    let (sin_th, cos_th) = params.zeeman.theta.sin_cos();
    let envelope = params.e_so * cos_phi * zpf;
    Ok(CouplingEstimate {
        ej_eff: ej_eff(params),
        phi_zpf: zpf,
        j_transverse: envelope * cos_th,
        j_longitudinal: envelope * sin_th,
        static_spin_shift: params.e_so * sin_phi,
    })
}

/// Rotation from the junction spin axes to the Zeeman eigenbasis.
///
/// Columns are the upper and lower Zeeman eigenspinors at field angle
/// `theta`; the matrix is orthogonal with determinant one.
pub fn spin_rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = (0.5 * theta).sin_cos();
    Matrix2::new(c, -s, s, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::ZeemanField;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ej_eff_interpolates_between_sum_and_difference() {
        let p = CircuitParams::reference_device();
        assert_abs_diff_eq!(ej_eff(&p.with_phi_ext(0.0)), p.e_j + p.e_0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            ej_eff(&p.with_phi_ext(std::f64::consts::FRAC_PI_2)),
            p.e_j - p.e_0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn phi_zpf_closed_form_checks_out() {
        // E_c = E_J_eff / 2 makes the fourth root equal to one.
        let p = CircuitParams {
            e_c: 6.0,
            e_j: 12.0,
            e_0: 0.0,
            e_so: 0.0,
            zeeman: ZeemanField::zero(),
            phi_ext: 0.0,
        };
        assert_abs_diff_eq!(phi_zpf(&p).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn quadrature_sum_is_angle_independent() {
        let base = CircuitParams::reference_device().with_phi_ext(0.9);
        for theta in [0.0, 0.3, 1.0, std::f64::consts::FRAC_PI_2, 2.4] {
            let p = base.with_zeeman(ZeemanField { magnitude: 1.0, theta });
            let est = coupling_strengths(&p).unwrap();
            let envelope = p.e_so * p.reduced_phi_ext().cos() * est.phi_zpf;
            assert_abs_diff_eq!(
                est.j_transverse * est.j_transverse + est.j_longitudinal * est.j_longitudinal,
                envelope * envelope,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn zero_josephson_energy_is_reported() {
        let p = CircuitParams {
            e_c: 0.3,
            e_j: 0.0,
            e_0: 0.0,
            e_so: 0.1,
            zeeman: ZeemanField::zero(),
            phi_ext: 0.0,
        };
        assert!(matches!(phi_zpf(&p), Err(CouplingError::NoJosephsonEnergy { .. })));
    }

    #[test]
    fn spin_rotation_is_special_orthogonal() {
        for theta in [0.0, 0.5, 1.2, 3.0] {
            let r = spin_rotation(theta);
            let id = r.transpose() * r;
            assert_abs_diff_eq!(id[(0, 0)], 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(id[(1, 1)], 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(id[(0, 1)], 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-14);
        }
    }
}
