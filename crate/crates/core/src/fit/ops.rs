//! Derived extraction routines built on the fit primitives.

use super::linear::weighted_linear_fit;
use super::{fit, FitError, Model};
use crate::constants::H_OVER_KB_MK_PER_GHZ;

/// Power-law scaling of coherence time with pulse number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpScalingFit {
    /// Power-law prefactor (coherence time at one pulse).
    pub amplitude: f64,
    /// Scaling exponent of the power law.
    pub gamma: f64,
    /// One-sigma uncertainty of the exponent.
    pub gamma_sigma: f64,
    /// Inferred noise-spectrum exponent `gamma / (1 - gamma)`.
    pub beta: f64,
    /// One-sigma uncertainty of `beta` by linear propagation.
    pub beta_sigma: f64,
    /// True when `gamma >= 1`, where `beta` diverges.
    pub diverging: bool,
}

/// Noise-spectrum exponent implied by a coherence-scaling exponent.
pub fn beta_from_gamma(gamma: f64) -> f64 {
    if gamma >= 1.0 {
        f64::INFINITY
    } else {
        gamma / (1.0 - gamma)
    }
}

/// Fits `T2(n) = A n^gamma` on log-log axes and derives the
/// noise-spectrum exponent `beta = gamma / (1 - gamma)`.
pub fn cp_scaling_exponent(n_pulses: &[f64], t2: &[f64]) -> Result<CpScalingFit, FitError> {
    if n_pulses.len() != t2.len() {
        return Err(FitError::LengthMismatch { x: n_pulses.len(), y: t2.len() });
    }
    if n_pulses.iter().chain(t2).any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(FitError::Domain {
            model: "cp_scaling",
            constraint: "strictly positive pulse numbers and times",
        });
    }
    let lx: Vec<f64> = n_pulses.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = t2.iter().map(|v| v.ln()).collect();
    let line = weighted_linear_fit(&lx, &ly, None)?;

    let gamma = line.slope;
    let gamma_sigma = line.slope_sigma;
    let diverging = gamma >= 1.0;
    let beta = beta_from_gamma(gamma);
    let beta_sigma = if diverging {
        f64::INFINITY
    } else {
        let d = 1.0 - gamma;
        gamma_sigma / (d * d)
    };
    Ok(CpScalingFit {
        amplitude: line.intercept.exp(),
        gamma,
        gamma_sigma,
        beta,
        beta_sigma,
        diverging,
    })
}

/// Detuning-noise strength and drive-noise coefficient extracted from
/// driven-decay times versus drive rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiNoiseFit {
    /// Low-frequency detuning-noise strength, same unit as the rates.
    pub sigma_f: f64,
    /// Dimensionless drive-proportional decay coefficient.
    pub c_drive: f64,
    /// True when a significantly negative component was clamped to zero;
    /// the two-channel decomposition then does not describe the data.
    pub clamped: bool,
}

impl RabiNoiseFit {
    /// Decay time predicted by both channels together at drive rate `f`.
    pub fn predicted_decay(&self, f: f64) -> f64 {
        let z = self.sigma_f.powi(4) / (4.0 * f * f) + self.c_drive.powi(2) * f * f;
        1.0 / z.sqrt()
    }

    /// Slow-drive asymptote `2 f / sigma_f^2` of the decay time.
    pub fn dephasing_asymptote(&self, f: f64) -> f64 {
        2.0 * f / (self.sigma_f * self.sigma_f)
    }

    /// Fast-drive asymptote `1 / (C f)` of the decay time.
    pub fn drive_asymptote(&self, f: f64) -> f64 {
        1.0 / (self.c_drive * f)
    }
}

/// Decomposes driven-decay rates into a detuning-noise channel falling
/// as `1/f^2` and a drive-proportional channel growing as `f^2`.
///
/// The squared decay rate is linear in `(sigma_f^4, C^2)`, so the
/// extraction is a plain two-parameter linear solve; tiny negative
/// components from rounding are clamped silently, significant ones raise
/// the `clamped` flag.
pub fn rabi_noise_extract(f_rabi: &[f64], t_decay: &[f64]) -> Result<RabiNoiseFit, FitError> {
    let n = f_rabi.len();
    if t_decay.len() != n {
        return Err(FitError::LengthMismatch { x: n, y: t_decay.len() });
    }
    if n < 2 {
        return Err(FitError::NotEnoughData { min: 2, got: n });
    }
    if f_rabi.iter().chain(t_decay).any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(FitError::Domain {
            model: "rabi_noise",
            constraint: "strictly positive rates and decay times",
        });
    }

    // z = 1/T^2 = u a + v b with a = 1/(4 f^2), b = f^2, u = sigma^4,
    // v = C^2: two-parameter normal equations.
    let (mut saa, mut sab, mut sbb, mut saz, mut sbz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let a = 1.0 / (4.0 * f_rabi[i] * f_rabi[i]);
        let b = f_rabi[i] * f_rabi[i];
        let z = 1.0 / (t_decay[i] * t_decay[i]);
        saa += a * a;
        sab += a * b;
        sbb += b * b;
        saz += a * z;
        sbz += b * z;
    }
    let det = saa * sbb - sab * sab;
    if !det.is_finite() || det <= 0.0 {
        return Err(FitError::RankDeficient);
    }
    let u = (sbb * saz - sab * sbz) / det;
    let v = (saa * sbz - sab * saz) / det;

    // Reference scales of each component if it alone carried the data.
    let u_ref = (saz / saa).abs().max(f64::MIN_POSITIVE);
    let v_ref = (sbz / sbb).abs().max(f64::MIN_POSITIVE);
    let clamped = u < -1e-6 * u_ref || v < -1e-6 * v_ref;

    Ok(RabiNoiseFit { sigma_f: u.max(0.0).powf(0.25), c_drive: v.max(0.0).sqrt(), clamped })
}

/// Ratio of a frequency fluctuation to a control susceptibility.
///
/// Converts an extracted noise strength (GHz) and a transition
/// susceptibility (GHz per control unit) into an equivalent
/// control-parameter fluctuation.
pub fn susceptibility_bound(sigma_f: f64, susceptibility: f64) -> Result<f64, FitError> {
    if !(sigma_f.is_finite() && susceptibility.is_finite()) {
        return Err(FitError::NonFiniteData);
    }
    if sigma_f < 0.0 || susceptibility == 0.0 {
        return Err(FitError::Domain {
            model: "bound",
            constraint: "non-negative sigma and non-zero susceptibility",
        });
    }
    Ok(sigma_f / susceptibility.abs())
}

/// Temperature inferred from thermal population ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureEstimate {
    /// Temperature in mK. Infinite when a single ratio equals one,
    /// negative when it exceeds one (population inversion).
    pub t_mk: f64,
    /// One-sigma uncertainty in mK; NaN when underdetermined.
    pub t_sigma_mk: f64,
    /// True when the data implies an infinite or negative temperature.
    pub unphysical: bool,
}

/// Infers a temperature from population ratios versus transition
/// frequency, `ratio = exp(-h f / kB T)`.
///
/// A single point inverts the formula directly; two or more points go
/// through the one-parameter least-squares model.
pub fn boltzmann_temperature(
    f_ghz: &[f64],
    ratios: &[f64],
) -> Result<TemperatureEstimate, FitError> {
    let n = f_ghz.len();
    if ratios.len() != n {
        return Err(FitError::LengthMismatch { x: n, y: ratios.len() });
    }
    if n == 0 {
        return Err(FitError::NotEnoughData { min: 1, got: 0 });
    }
    if f_ghz.iter().any(|&f| !(f.is_finite() && f > 0.0))
        || ratios.iter().any(|&r| !(r.is_finite() && r > 0.0))
    {
        return Err(FitError::Domain {
            model: "boltzmann",
            constraint: "positive frequencies and ratios",
        });
    }

    if n == 1 {
        let log = (1.0 / ratios[0]).ln();
        let (t_mk, unphysical) = if log == 0.0 {
            (f64::INFINITY, true)
        } else {
            let t = H_OVER_KB_MK_PER_GHZ * f_ghz[0] / log;
            (t, t < 0.0)
        };
        return Ok(TemperatureEstimate { t_mk, t_sigma_mk: f64::NAN, unphysical });
    }

    let out = fit(&Model::Boltzmann, f_ghz, ratios, None, None)?;
    let t_mk = out.params[0];
    Ok(TemperatureEstimate {
        t_mk,
        t_sigma_mk: out.uncertainties[0],
        unphysical: !t_mk.is_finite() || t_mk <= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn scaling_exponent_round_trips_on_synthetic_power_law() {
        let n: Vec<f64> = (0..8).map(|k| 2.0f64.powi(k)).collect();
        let t2: Vec<f64> = n.iter().map(|x| 0.04 * x.powf(0.47)).collect();
        let fit = cp_scaling_exponent(&n, &t2).unwrap();
        assert_abs_diff_eq!(fit.gamma, 0.47, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.amplitude, 0.04, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.beta, 0.47 / 0.53, epsilon = 1e-9);
        assert!(!fit.diverging);
    }

    #[test]
    fn beta_diverges_at_unit_gamma() {
        assert!(beta_from_gamma(1.0).is_infinite());
        assert_abs_diff_eq!(beta_from_gamma(0.5), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn noise_split_recovers_both_channels() {
        let sigma = 0.0397f64;
        let c = 0.25;
        let f: Vec<f64> = (1..=30).map(|i| 0.01 * i as f64).collect();
        let t: Vec<f64> = f
            .iter()
            .map(|&x| 1.0 / (sigma.powi(4) / (4.0 * x * x) + c * c * x * x).sqrt())
            .collect();
        let fit = rabi_noise_extract(&f, &t).unwrap();
        assert_abs_diff_eq!(fit.sigma_f, sigma, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.c_drive, c, epsilon = 1e-9);
        assert!(!fit.clamped);
    }

    #[test]
    fn pure_dephasing_data_yields_exact_asymptote() {
        let sigma = 0.05;
        let f: Vec<f64> = (1..=10).map(|i| 0.02 * i as f64).collect();
        let t: Vec<f64> = f.iter().map(|&x| 2.0 * x / (sigma * sigma)).collect();
        let fit = rabi_noise_extract(&f, &t).unwrap();
        assert_abs_diff_eq!(fit.sigma_f, sigma, epsilon = 1e-9);
        // v = C^2 is a roundoff-level residue of the normal equations; the
        // square root inflates it, so allow a loose but physically
        // negligible ceiling.
        assert!(fit.c_drive.abs() < 1e-5);
        assert_abs_diff_eq!(
            fit.dephasing_asymptote(0.1),
            2.0 * 0.1 / (sigma * sigma),
            epsilon = 1e-12
        );
    }

    #[test]
    fn single_point_temperature_matches_closed_form() {
        let est = boltzmann_temperature(&[0.6], &[0.7]).unwrap();
        assert_abs_diff_eq!(
            est.t_mk,
            H_OVER_KB_MK_PER_GHZ * 0.6 / (1.0f64 / 0.7).ln(),
            epsilon = 1e-9
        );
        assert!(!est.unphysical);
        assert!(est.t_sigma_mk.is_nan());
    }

    #[test]
    fn unit_ratio_flags_infinite_temperature() {
        let est = boltzmann_temperature(&[1.0], &[1.0]).unwrap();
        assert!(est.t_mk.is_infinite());
        assert!(est.unphysical);
    }

    #[test]
    fn multi_point_temperature_recovers_truth() {
        let t_true = 100.0;
        let f: Vec<f64> = (1..=12).map(|i| 0.1 * i as f64).collect();
        let r: Vec<f64> = f.iter().map(|&x| (-H_OVER_KB_MK_PER_GHZ * x / t_true).exp()).collect();
        let est = boltzmann_temperature(&f, &r).unwrap();
        assert_abs_diff_eq!(est.t_mk, t_true, epsilon = 1e-6 * t_true);
    }

    #[test]
    fn bound_rejects_zero_susceptibility() {
        assert!(susceptibility_bound(0.04, 0.0).is_err());
        assert_abs_diff_eq!(susceptibility_bound(0.0397, 0.16).unwrap(), 0.248125, epsilon = 1e-12);
    }
}
