//! Circuit parameters and the joint spin + transmon Hamiltonian.
//!
//! The circuit is a superconducting loop containing a large reference
//! Josephson junction and a weak spinful junction, shunted by a capacitor.
//! With the phase difference `phi` across the weak junction and an external
//! flux bias `phi_ext` threading the loop, the Hamiltonian acting on the
//! (phase circle) x (spin-1/2) Hilbert space is
//!
//! ```text
//! H = 4 E_c n^2  - E_J cos(phi - a_ref)
//!     - E_0 cos(phi - a_dot) - E_SO sin(phi - a_dot) sigma_x
//!     + (E_Z / 2) (cos(theta) sigma_z + sin(theta) sigma_x)
//! ```
//!
//! where `n = -i d/dphi` is the charge conjugate to `phi`. The flux offsets
//! `(a_ref, a_dot)` depend on the gauge: `(0, phi_ext)` places the flux on
//! the weak-junction terms, `(-phi_ext, 0)` places it on the reference
//! junction. The two placements are related by the charge-diagonal unitary
//! `diag(exp(i n phi_ext))` and therefore share a spectrum exactly, even
//! after truncation of the charge basis.
//!
//! Matrices are assembled in the charge eigenbasis `|n>`, `n` in
//! `-n_charge..=n_charge`, where `cos` and `sin` of the phase become
//! nearest-neighbour hopping terms:
//!
//! ```text
//! <n+1| cos(phi - a) |n> = exp(-i a) / 2
//! <n+1| sin(phi - a) |n> = -i exp(-i a) / 2
//! ```
//!
//! Basis states interleave spin within each charge: index `2 k + s` holds
//! charge `n = k - n_charge` and spin component `s` (0 = sigma_z up).

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::constants::MU_B_GHZ_PER_MT;

/// Errors raised while validating parameters or assembling the Hamiltonian.
#[derive(Debug, Error)]
pub enum ModelError {
    /// A named parameter was NaN or infinite.
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    /// The field angle lies outside the physical range `[0, pi]`.
    #[error("field angle theta must lie in [0, pi], got {0}")]
    ThetaOutOfRange(f64),
    /// A Zeeman magnitude was negative; magnitudes carry no sign.
    #[error("zeeman magnitude must be non-negative, got {0}")]
    NegativeZeeman(f64),
    /// The requested charge cutoff does not fit in the address space.
    #[error("charge cutoff {0} overflows the matrix dimension")]
    DimensionOverflow(usize),
}

/// Zeeman field acting on the trapped spin, expressed as a splitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeemanField {
    /// Total Zeeman splitting `E_Z` as a frequency (GHz). Non-negative.
    pub magnitude: f64,
    /// Angle (rad) between the field and the internal spin quantization
    /// axis, in `[0, pi]`. At `theta = 0` the spin-flip transition couples
    /// transversely to the transmon mode; at `pi / 2` the coupling is
    /// purely longitudinal.
    pub theta: f64,
}

impl ZeemanField {
    /// Field of the given splitting along the internal quantization axis.
    pub fn aligned(magnitude: f64) -> Self {
        Self { magnitude, theta: 0.0 }
    }

    /// Zero field; the spin sector is then Kramers degenerate at
    /// `phi_ext` equal to 0 or pi.
    pub fn zero() -> Self {
        Self { magnitude: 0.0, theta: 0.0 }
    }

    fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [("zeeman.magnitude", self.magnitude), ("zeeman.theta", self.theta)] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { name, value });
            }
        }
        if self.magnitude < 0.0 {
            return Err(ModelError::NegativeZeeman(self.magnitude));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.theta) {
            return Err(ModelError::ThetaOutOfRange(self.theta));
        }
        Ok(())
    }
}

/// Converts an applied field in mT and a g-factor into a Zeeman field.
pub fn zeeman_from_field(b_mt: f64, g_factor: f64, theta: f64) -> ZeemanField {
    ZeemanField { magnitude: (g_factor * MU_B_GHZ_PER_MT * b_mt).abs(), theta }
}

/// Where the external flux enters the potential.
///
/// Both gauges describe the same physical circuit; eigenvalues agree to
/// machine precision at any charge cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Gauge {
    /// Flux on the reference-junction term: `-E_J cos(phi + phi_ext)`.
    FluxOnReference,
    /// Flux on the weak-junction terms: `-E_0 cos(phi - phi_ext)` and
    /// `-E_SO sin(phi - phi_ext) sigma_x`.
    #[default]
    FluxOnDot,
}

/// Charge-basis truncation and gauge choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSpec {
    /// Charge cutoff: the basis keeps `|n| <= n_charge`.
    pub n_charge: usize,
    /// Flux placement.
    pub gauge: Gauge,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self { n_charge: 40, gauge: Gauge::default() }
    }
}

impl BasisSpec {
    /// Matrix dimension `2 (2 n_charge + 1)`, checked for overflow.
    pub fn dim(&self) -> Result<usize, ModelError> {
        self.n_charge
            .checked_mul(2)
            .and_then(|d| d.checked_add(1))
            .and_then(|d| d.checked_mul(2))
            .ok_or(ModelError::DimensionOverflow(self.n_charge))
    }

    /// Number of charge states `2 n_charge + 1` (per spin component).
    pub fn charge_dim(&self) -> usize {
        2 * self.n_charge + 1
    }
}

/// Energies of the joint circuit, all as frequencies in GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    /// Charging energy `E_c` of the shunt capacitor.
    pub e_c: f64,
    /// Josephson energy `E_J` of the reference junction.
    pub e_j: f64,
    /// Spin-independent Josephson energy `E_0` of the weak junction.
    pub e_0: f64,
    /// Spin-dependent Josephson energy `E_SO` of the weak junction.
    pub e_so: f64,
    /// Zeeman field on the trapped spin.
    pub zeeman: ZeemanField,
    /// External flux bias as a phase (rad); interpreted modulo 2 pi.
    pub phi_ext: f64,
}

impl CircuitParams {
    /// Parameter set of the measured reference device.
    pub fn reference_device() -> Self {
        Self {
            e_c: 0.284,
            e_j: 13.1,
            e_0: 0.211,
            e_so: 0.305,
            zeeman: ZeemanField::zero(),
            phi_ext: 0.0,
        }
    }

    /// Same device with the slightly larger spin-dependent Josephson
    /// energy obtained when refitting against time-domain data.
    pub fn reference_device_alt() -> Self {
        Self { e_so: 0.309, ..Self::reference_device() }
    }

    /// Returns a copy biased at the given external flux.
    pub fn with_phi_ext(self, phi_ext: f64) -> Self {
        Self { phi_ext, ..self }
    }

    /// Returns a copy with the given Zeeman field.
    pub fn with_zeeman(self, zeeman: ZeemanField) -> Self {
        Self { zeeman, ..self }
    }

    /// External flux reduced to `[0, 2 pi)`.
    pub fn reduced_phi_ext(&self) -> f64 {
        self.phi_ext.rem_euclid(2.0 * std::f64::consts::PI)
    }

    /// Rejects non-finite energies and invalid field specifications.
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [
            ("e_c", self.e_c),
            ("e_j", self.e_j),
            ("e_0", self.e_0),
            ("e_so", self.e_so),
            ("phi_ext", self.phi_ext),
        ] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { name, value });
            }
        }
        self.zeeman.validate()
    }
}

/// Assembles the joint Hamiltonian in the charge basis.
///
/// The matrix is Hermitian by construction, of dimension
/// `2 (2 n_charge + 1)`, with charge-diagonal Zeeman blocks and
/// nearest-neighbour charge hopping from the junction terms.
pub fn build_joint_hamiltonian(
    params: &CircuitParams,
    basis: &BasisSpec,
) -> Result<DMatrix<Complex64>, ModelError> {
    params.validate()?;
    let dim = basis.dim()?;
    let n_states = basis.charge_dim();
    let phi = params.reduced_phi_ext();

    // Flux offsets (a_ref, a_dot) per gauge; see the module docs.
    let (a_ref, a_dot) = match basis.gauge {
        Gauge::FluxOnDot => (0.0, phi),
        Gauge::FluxOnReference => (-phi, 0.0),
    };

    // <n+1| . |n> hopping amplitudes of the three junction terms.
    let phase_ref = Complex64::from_polar(1.0, -a_ref);
    let phase_dot = Complex64::from_polar(1.0, -a_dot);
    let hop_same_spin = -0.5 * (params.e_j * phase_ref + params.e_0 * phase_dot);
    let hop_spin_flip = Complex64::new(0.0, 0.5 * params.e_so) * phase_dot;

    // Charge-diagonal Zeeman block (E_Z / 2)(cos t sz + sin t sx).
    let half_ez = 0.5 * params.zeeman.magnitude;
    let hz_diag = half_ez * params.zeeman.theta.cos();
    let hz_off = Complex64::new(half_ez * params.zeeman.theta.sin(), 0.0);

    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for k in 0..n_states {
        let nq = k as f64 - basis.n_charge as f64;
        let kinetic = 4.0 * params.e_c * nq * nq;
        let (up, dn) = (2 * k, 2 * k + 1);
        h[(up, up)] = Complex64::new(kinetic + hz_diag, 0.0);
        h[(dn, dn)] = Complex64::new(kinetic - hz_diag, 0.0);
        h[(up, dn)] = hz_off;
        h[(dn, up)] = hz_off;
    }
    for k in 0..n_states - 1 {
        for s in 0..2 {
            let (row, col) = (2 * (k + 1) + s, 2 * k + s);
            h[(row, col)] = hop_same_spin;
            h[(col, row)] = hop_same_spin.conj();
        }
        for s in 0..2 {
            let (row, col) = (2 * (k + 1) + (1 - s), 2 * k + s);
            h[(row, col)] = hop_spin_flip;
            h[(col, row)] = hop_spin_flip.conj();
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hermiticity_defect(h: &DMatrix<Complex64>) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
            }
        }
        worst
    }

    #[test]
    fn hamiltonian_is_hermitian_in_both_gauges() {
        let params = CircuitParams::reference_device()
            .with_phi_ext(1.234)
            .with_zeeman(ZeemanField { magnitude: 3.7, theta: 0.8 });
        for gauge in [Gauge::FluxOnDot, Gauge::FluxOnReference] {
            let basis = BasisSpec { n_charge: 12, gauge };
            let h = build_joint_hamiltonian(&params, &basis).unwrap();
            assert_eq!(h.nrows(), basis.dim().unwrap());
            assert_eq!(hermiticity_defect(&h), 0.0);
        }
    }

    #[test]
    fn gauges_are_related_by_charge_diagonal_unitary() {
        // U = diag(exp(i n phi_ext)) maps the dot gauge onto the reference
        // gauge exactly, element by element.
        let params = CircuitParams::reference_device()
            .with_phi_ext(2.1)
            .with_zeeman(ZeemanField { magnitude: 1.3, theta: 0.4 });
        let n_charge = 6;
        let dot =
            build_joint_hamiltonian(&params, &BasisSpec { n_charge, gauge: Gauge::FluxOnDot })
                .unwrap();
        let reference = build_joint_hamiltonian(
            &params,
            &BasisSpec { n_charge, gauge: Gauge::FluxOnReference },
        )
        .unwrap();

        let dim = dot.nrows();
        let phi = params.reduced_phi_ext();
        let u = DMatrix::<Complex64>::from_fn(dim, dim, |i, j| {
            if i == j {
                let nq = (i / 2) as f64 - n_charge as f64;
                Complex64::from_polar(1.0, nq * phi)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let rotated = &u * &dot * u.adjoint();
        let defect = (&rotated - &reference).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(defect < 1e-12, "gauge unitary defect {defect}");
    }

    #[test]
    fn flux_enters_modulo_two_pi() {
        let base = CircuitParams::reference_device();
        let basis = BasisSpec { n_charge: 8, gauge: Gauge::FluxOnDot };
        let a = build_joint_hamiltonian(&base.with_phi_ext(0.7), &basis).unwrap();
        let b =
            build_joint_hamiltonian(&base.with_phi_ext(0.7 + 4.0 * std::f64::consts::PI), &basis)
                .unwrap();
        let defect = (&a - &b).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(defect < 1e-9, "flux periodicity defect {defect}");
    }

    #[test]
    fn bare_spin_block_reproduces_zeeman_splitting() {
        // With all junction energies off, every charge state carries the
        // two Zeeman levels at +-E_Z/2.
        let params = CircuitParams {
            e_c: 0.0,
            e_j: 0.0,
            e_0: 0.0,
            e_so: 0.0,
            zeeman: ZeemanField { magnitude: 2.5, theta: 1.1 },
            phi_ext: 0.0,
        };
        let basis = BasisSpec { n_charge: 2, gauge: Gauge::FluxOnDot };
        let h = build_joint_hamiltonian(&params, &basis).unwrap();
        let eig = h.symmetric_eigen();
        for ev in eig.eigenvalues.iter() {
            assert_abs_diff_eq!(ev.abs(), 1.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn zeeman_from_field_matches_bohr_magneton_scale() {
        let z = zeeman_from_field(28.0, 12.7, 0.0);
        assert_abs_diff_eq!(z.magnitude, 4.97704872, epsilon = 1e-9);
        let z = zeeman_from_field(65.0, 12.7, 0.3);
        assert_abs_diff_eq!(z.magnitude, 11.5538631, epsilon = 1e-8);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let basis = BasisSpec::default();
        let nan = CircuitParams { e_c: f64::NAN, ..CircuitParams::reference_device() };
        assert!(matches!(
            build_joint_hamiltonian(&nan, &basis),
            Err(ModelError::NonFinite { name: "e_c", .. })
        ));
        let neg = CircuitParams::reference_device()
            .with_zeeman(ZeemanField { magnitude: -1.0, theta: 0.0 });
        assert!(matches!(
            build_joint_hamiltonian(&neg, &basis),
            Err(ModelError::NegativeZeeman(_))
        ));
        let tilted = CircuitParams::reference_device()
            .with_zeeman(ZeemanField { magnitude: 1.0, theta: 3.5 });
        assert!(matches!(
            build_joint_hamiltonian(&tilted, &basis),
            Err(ModelError::ThetaOutOfRange(_))
        ));
        assert!(BasisSpec { n_charge: usize::MAX / 2, gauge: Gauge::FluxOnDot }.dim().is_err());
    }
}
