//! Catalogue of time-domain and spectroscopy fit models.
//!
//! All decays are written with decaying exponentials, `exp(-t/T)`, and
//! oscillations as plain cosines; frequencies are angular in radians per
//! x-unit, so cyclic frequencies are `omega / 2 pi`. Parameter order is
//! fixed by [`FitModel::param_names`] and shared with serialized output.

use super::{dominant_angular_frequency, FitError, FitModel};
use crate::constants::H_OVER_KB_MK_PER_GHZ;
use crate::fit::linear::weighted_linear_fit;

/// The supported fit models.
///
/// | model        | form                                                  |
/// |--------------|-------------------------------------------------------|
/// | `rabi`       | `a cos(w x) exp(-x/t) + c`                            |
/// | `t1`         | `a exp(-x/t) + c`                                     |
/// | `ramsey`     | `a cos(w x - p) exp(-(x/t)^(d+1)) + c`                |
/// | `echo`       | `ramsey + e x`                                        |
/// | `cp`         | same as `echo`, x is the total evolution time         |
/// | `cp_scaling` | `A x^g` (coherence time versus pulse number)          |
/// | `rabi_noise` | `1 / sqrt(s^4/(4 x^2) + C^2 x^2)` (decay versus rate) |
/// | `boltzmann`  | `exp(-(h/kB) x / T)` with x in GHz, T in mK           |
/// | `line`       | `m x + b`                                             |
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// Decaying cosine of a driven qubit.
    Rabi,
    /// Plain exponential relaxation.
    T1,
    /// Stretched-exponential decaying cosine of a free induction decay.
    Ramsey,
    /// Ramsey form plus a linear drift term, for echo sequences.
    Echo,
    /// Echo form on the total evolution time of a multi-pulse sequence.
    Cp,
    /// Power-law growth of coherence time with pulse number.
    CpScaling,
    /// Driven-decay rate from low-frequency detuning noise plus a
    /// drive-proportional channel.
    RabiNoise,
    /// Thermal population ratio versus transition frequency.
    Boltzmann,
    /// Straight line.
    Line,
}

impl Model {
    /// Every catalogue entry, in documentation order.
    pub const ALL: [Model; 9] = [
        Model::Rabi,
        Model::T1,
        Model::Ramsey,
        Model::Echo,
        Model::Cp,
        Model::CpScaling,
        Model::RabiNoise,
        Model::Boltzmann,
        Model::Line,
    ];

    /// Parses a model name; `-` and `_` are interchangeable.
    pub fn from_name(name: &str) -> Option<Model> {
        let normalized = name.trim().to_ascii_lowercase().replace('-', "_");
        Model::ALL.iter().copied().find(|m| m.name() == normalized)
    }
}

/// Evaluation of the shared stretched-cosine family (ramsey/echo/cp).
///
/// Returns `(oscillation, decay, stretch_exponent_value)` so gradients
/// can reuse the pieces.
fn stretched_cosine_parts(x: f64, w: f64, p: f64, t: f64, d: f64) -> (f64, f64, f64) {
    let osc = (w * x - p).cos();
    let u = if x == 0.0 { 0.0 } else { (x / t).powf(d + 1.0) };
    let decay = (-u).exp();
    (osc, decay, u)
}

fn stretched_cosine_grad(x: f64, params: &[f64], out: &mut [f64], with_slope: bool) {
    let (a, w, p, t, d) = (params[0], params[1], params[2], params[3], params[4]);
    let (osc, decay, u) = stretched_cosine_parts(x, w, p, t, d);
    let sin = (w * x - p).sin();
    if decay > 0.0 {
        out[0] = osc * decay;
        out[1] = -a * x * sin * decay;
        out[2] = a * sin * decay;
        out[3] = a * osc * decay * (d + 1.0) * u / t;
        out[4] = if u == 0.0 { 0.0 } else { -a * osc * decay * u * (x / t).ln() };
    } else {
        out[0] = 0.0;
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = 0.0;
        out[4] = 0.0;
    }
    out[5] = 1.0;
    if with_slope {
        out[6] = x;
    }
}

impl FitModel for Model {
    fn name(&self) -> &'static str {
        match self {
            Model::Rabi => "rabi",
            Model::T1 => "t1",
            Model::Ramsey => "ramsey",
            Model::Echo => "echo",
            Model::Cp => "cp",
            Model::CpScaling => "cp_scaling",
            Model::RabiNoise => "rabi_noise",
            Model::Boltzmann => "boltzmann",
            Model::Line => "line",
        }
    }

    fn param_names(&self) -> &'static [&'static str] {
        match self {
            Model::Rabi => &["amplitude", "omega", "t_decay", "offset"],
            Model::T1 => &["amplitude", "t1", "offset"],
            Model::Ramsey => &["amplitude", "omega", "phase", "t2", "stretch", "offset"],
            Model::Echo | Model::Cp => {
                &["amplitude", "omega", "phase", "t2", "stretch", "offset", "slope"]
            }
            Model::CpScaling => &["amplitude", "gamma"],
            Model::RabiNoise => &["sigma_f", "c_drive"],
            Model::Boltzmann => &["temperature_mk"],
            Model::Line => &["slope", "intercept"],
        }
    }

    fn eval(&self, x: f64, params: &[f64]) -> f64 {
        match self {
            Model::Rabi => {
                let (a, w, t, c) = (params[0], params[1], params[2], params[3]);
                a * (w * x).cos() * (-x / t).exp() + c
            }
            Model::T1 => {
                let (a, t, c) = (params[0], params[1], params[2]);
                a * (-x / t).exp() + c
            }
            Model::Ramsey => {
                let (osc, decay, _) =
                    stretched_cosine_parts(x, params[1], params[2], params[3], params[4]);
                params[0] * osc * decay + params[5]
            }
            Model::Echo | Model::Cp => {
                let (osc, decay, _) =
                    stretched_cosine_parts(x, params[1], params[2], params[3], params[4]);
                params[0] * osc * decay + params[5] + params[6] * x
            }
            Model::CpScaling => params[0] * x.powf(params[1]),
            Model::RabiNoise => {
                let (s, c) = (params[0], params[1]);
                let z = s.powi(4) / (4.0 * x * x) + c * c * x * x;
                1.0 / z.sqrt()
            }
            Model::Boltzmann => (-H_OVER_KB_MK_PER_GHZ * x / params[0]).exp(),
            Model::Line => params[0] * x + params[1],
        }
    }

    fn jacobian_row(&self, x: f64, params: &[f64], out: &mut [f64]) {
        match self {
            Model::Rabi => {
                let (a, w, t, _) = (params[0], params[1], params[2], params[3]);
                let decay = (-x / t).exp();
                let (sin, cos) = (w * x).sin_cos();
                if decay > 0.0 {
                    out[0] = cos * decay;
                    out[1] = -a * x * sin * decay;
                    out[2] = a * cos * decay * x / (t * t);
                } else {
                    out[0] = 0.0;
                    out[1] = 0.0;
                    out[2] = 0.0;
                }
                out[3] = 1.0;
            }
            Model::T1 => {
                let (a, t, _) = (params[0], params[1], params[2]);
                let decay = (-x / t).exp();
                if decay > 0.0 {
                    out[0] = decay;
                    out[1] = a * decay * x / (t * t);
                } else {
                    out[0] = 0.0;
                    out[1] = 0.0;
                }
                out[2] = 1.0;
            }
            Model::Ramsey => stretched_cosine_grad(x, params, out, false),
            Model::Echo | Model::Cp => stretched_cosine_grad(x, params, out, true),
            Model::CpScaling => {
                let (a, g) = (params[0], params[1]);
                let powed = x.powf(g);
                out[0] = powed;
                out[1] = a * powed * x.ln();
            }
            Model::RabiNoise => {
                let (s, c) = (params[0], params[1]);
                let z = s.powi(4) / (4.0 * x * x) + c * c * x * x;
                let z32 = z * z.sqrt();
                out[0] = -0.5 * (s * s * s / (x * x)) / z32;
                out[1] = -c * x * x / z32;
            }
            Model::Boltzmann => {
                let t = params[0];
                let f = (-H_OVER_KB_MK_PER_GHZ * x / t).exp();
                out[0] = if f > 0.0 { f * H_OVER_KB_MK_PER_GHZ * x / (t * t) } else { 0.0 };
            }
            Model::Line => {
                out[0] = x;
                out[1] = 1.0;
            }
        }
    }

    fn lower_bounds(&self) -> Vec<f64> {
        let tiny = f64::MIN_POSITIVE;
        let inf = f64::NEG_INFINITY;
        match self {
            Model::Rabi => vec![inf, 0.0, tiny, inf],
            Model::T1 => vec![inf, tiny, inf],
            Model::Ramsey => vec![inf, 0.0, inf, tiny, 0.0, inf],
            Model::Echo | Model::Cp => vec![inf, 0.0, inf, tiny, 0.0, inf, inf],
            Model::CpScaling => vec![tiny, inf],
            Model::RabiNoise => vec![0.0, 0.0],
            Model::Boltzmann => vec![tiny],
            Model::Line => vec![inf, inf],
        }
    }

    fn upper_bounds(&self) -> Vec<f64> {
        let inf = f64::INFINITY;
        match self {
            // The stretch exponent saturates at cubic-plus-one.
            Model::Ramsey => vec![inf, inf, inf, inf, 3.0, inf],
            Model::Echo | Model::Cp => vec![inf, inf, inf, inf, 3.0, inf, inf],
            _ => vec![inf; self.param_names().len()],
        }
    }

    fn initial_guess(&self, xs: &[f64], ys: &[f64]) -> Result<Vec<f64>, FitError> {
        let n = xs.len().min(ys.len());
        if n == 0 {
            return Err(FitError::NotEnoughData { min: 1, got: 0 });
        }
        let y_min = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let y_max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let y_mean = ys.iter().sum::<f64>() / n as f64;
        let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = (x_max - x_min).max(f64::MIN_POSITIVE);

        Ok(match self {
            Model::Rabi => {
                let omega = seed_omega(xs, ys, span);
                vec![0.5 * (y_max - y_min), omega, 0.5 * span, y_mean]
            }
            Model::T1 => {
                // Head and tail samples orient the decay.
                let head = ys[argmin(xs)];
                let tail = ys[argmax(xs)];
                vec![head - tail, span / 3.0, tail]
            }
            Model::Ramsey => {
                let omega = seed_omega(xs, ys, span);
                vec![0.5 * (y_max - y_min), omega, 0.0, 0.5 * span, 1.0, y_mean]
            }
            Model::Echo | Model::Cp => {
                let omega = seed_omega(xs, ys, span);
                vec![0.5 * (y_max - y_min), omega, 0.0, 0.5 * span, 1.0, y_mean, 0.0]
            }
            Model::CpScaling => {
                if ys[..n].iter().any(|&y| y <= 0.0) {
                    return Err(FitError::Domain {
                        model: self.name(),
                        constraint: "positive y values for the log-log seed",
                    });
                }
                let lx: Vec<f64> = xs[..n].iter().map(|v| v.ln()).collect();
                let ly: Vec<f64> = ys[..n].iter().map(|v| v.ln()).collect();
                let line = weighted_linear_fit(&lx, &ly, None)?;
                vec![line.intercept.exp(), line.slope]
            }
            Model::RabiNoise => {
                if ys[..n].iter().any(|&y| y <= 0.0) {
                    return Err(FitError::Domain {
                        model: self.name(),
                        constraint: "positive decay times",
                    });
                }
                let fit = crate::fit::ops::rabi_noise_extract(&xs[..n], &ys[..n])?;
                vec![fit.sigma_f, fit.c_drive]
            }
            Model::Boltzmann => {
                let seed = xs[..n]
                    .iter()
                    .zip(&ys[..n])
                    .find(|&(&x, &y)| x > 0.0 && y > 0.0 && y < 1.0)
                    .map(|(&x, &y)| H_OVER_KB_MK_PER_GHZ * x / (1.0 / y).ln());
                vec![seed.unwrap_or(1e6)]
            }
            Model::Line => match weighted_linear_fit(&xs[..n], &ys[..n], None) {
                Ok(line) => vec![line.slope, line.intercept],
                // Degenerate abscissa: start flat at the mean and let the
                // engine flag the unresolved split.
                Err(FitError::RankDeficient) => {
                    vec![0.0, ys[..n].iter().sum::<f64>() / n as f64]
                }
                Err(e) => return Err(e),
            },
        })
    }

    fn validate_domain(&self, xs: &[f64]) -> Result<(), FitError> {
        let violation = match self {
            Model::Ramsey | Model::Echo | Model::Cp => {
                xs.iter().any(|&x| x < 0.0).then_some("non-negative times for the stretched decay")
            }
            Model::CpScaling | Model::RabiNoise => {
                xs.iter().any(|&x| x <= 0.0).then_some("strictly positive x values")
            }
            _ => None,
        };
        match violation {
            Some(constraint) => Err(FitError::Domain { model: self.name(), constraint }),
            None => Ok(()),
        }
    }
}

/// Periodogram seed with a half-cycle fallback for non-oscillating data.
fn seed_omega(xs: &[f64], ys: &[f64], span: f64) -> f64 {
    let omega = dominant_angular_frequency(xs, ys);
    if omega > 0.0 {
        omega
    } else {
        std::f64::consts::PI / span
    }
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x < xs[best] {
            best = i;
        }
    }
    best
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
