//! Deterministic damped least-squares fitting and the model catalogue.
//!
//! The engine is a Levenberg-Marquardt loop with multiplicative damping of
//! the normal-equation diagonal, analytic Jacobians supplied by the
//! models, box constraints enforced by clamping, and covariance from the
//! Gauss-Newton approximation at the optimum. Every step either lowers
//! the weighted cost or is rejected, so the trace of accepted costs is
//! monotone non-increasing; with fixed inputs the whole procedure is
//! bitwise deterministic.

pub mod linear;
pub mod models;
pub mod ops;

pub use models::Model;

use nalgebra::{Cholesky, DMatrix, DVector};
use thiserror::Error;

/// Errors raised by fits and the derived extraction routines.
#[derive(Debug, Error)]
pub enum FitError {
    /// Fewer points than free parameters (or than the stated minimum).
    #[error("fit needs at least {min} points, got {got}")]
    NotEnoughData { min: usize, got: usize },
    /// Input slices disagree in length.
    #[error("input lengths differ: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    /// Input data contains NaN or infinities.
    #[error("data contains non-finite values")]
    NonFiniteData,
    /// Sigmas must be positive and finite when given.
    #[error("all sigmas must be positive and finite")]
    BadSigmas,
    /// Initial parameters evaluate to a non-finite cost.
    #[error("initial parameters give a non-finite cost")]
    BadInitial,
    /// The model's domain constraint is violated by the data.
    #[error("model `{model}` requires {constraint}")]
    Domain { model: &'static str, constraint: &'static str },
    /// Closed-form normal equations are singular, so the parameters
    /// themselves are undefined (degenerate abscissa and similar).
    /// Reported rather than silently regularized; the iterative engine
    /// instead flags degenerate optima on its outcome.
    #[error("normal equations are rank deficient")]
    RankDeficient,
}

/// A parametric scalar model with an analytic Jacobian.
pub trait FitModel {
    /// Stable lowercase identifier.
    fn name(&self) -> &'static str;
    /// Names of the parameters, fixing their order.
    fn param_names(&self) -> &'static [&'static str];
    /// Model value at `x`.
    fn eval(&self, x: f64, params: &[f64]) -> f64;
    /// Partial derivatives at `x` written into `out` (same order as
    /// [`FitModel::param_names`]).
    fn jacobian_row(&self, x: f64, params: &[f64], out: &mut [f64]);
    /// Elementwise lower parameter bounds.
    fn lower_bounds(&self) -> Vec<f64> {
        vec![f64::NEG_INFINITY; self.param_names().len()]
    }
    /// Elementwise upper parameter bounds.
    fn upper_bounds(&self) -> Vec<f64> {
        vec![f64::INFINITY; self.param_names().len()]
    }
    /// Data-driven starting parameters.
    fn initial_guess(&self, xs: &[f64], ys: &[f64]) -> Result<Vec<f64>, FitError>;
    /// Rejects x values outside the model's domain.
    fn validate_domain(&self, _xs: &[f64]) -> Result<(), FitError> {
        Ok(())
    }
}

/// Converged (or capped) result of a least-squares fit.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    /// Model identifier.
    pub model: &'static str,
    /// Parameter names in order.
    pub param_names: Vec<&'static str>,
    /// Best-fit parameters.
    pub params: Vec<f64>,
    /// One-sigma parameter uncertainties from the Gauss-Newton
    /// covariance. Scaled by the reduced chi-square when no sigmas were
    /// given, unscaled otherwise.
    pub uncertainties: Vec<f64>,
    /// Final weighted cost, `sum((y - f)^2 / sigma^2)`.
    pub cost: f64,
    /// Number of accepted iterations.
    pub iterations: usize,
    /// True when the gradient criterion was met before the iteration cap.
    pub converged: bool,
    /// True when the normal matrix is singular at the optimum: at least
    /// one parameter has no measurable effect there (for example a decay
    /// rate under a vanished amplitude) and the uncertainties are NaN.
    pub degenerate: bool,
    /// Costs after each accepted step, monotone non-increasing.
    pub cost_trace: Vec<f64>,
}

impl FitOutcome {
    /// Value of a named parameter.
    pub fn value(&self, name: &str) -> Option<f64> {
        let i = self.param_names.iter().position(|&n| n == name)?;
        Some(self.params[i])
    }

    /// One-sigma uncertainty of a named parameter.
    pub fn sigma(&self, name: &str) -> Option<f64> {
        let i = self.param_names.iter().position(|&n| n == name)?;
        Some(self.uncertainties[i])
    }
}

const MAX_ITERATIONS: usize = 200;
const GRADIENT_TOL: f64 = 1e-10;
const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e14;

/// Fits a model to data by damped least squares.
///
/// `sigmas` weight the residuals by `1/sigma`; `init` overrides the
/// model's own starting guess. Stops when the cost-gradient norm falls
/// below `1e-10 (1 + cost)` or after 200 accepted iterations.
pub fn fit(
    model: &dyn FitModel,
    xs: &[f64],
    ys: &[f64],
    sigmas: Option<&[f64]>,
    init: Option<&[f64]>,
) -> Result<FitOutcome, FitError> {
    let n = xs.len();
    let n_params = model.param_names().len();
    if ys.len() != n {
        return Err(FitError::LengthMismatch { x: n, y: ys.len() });
    }
    if n < n_params {
        return Err(FitError::NotEnoughData { min: n_params, got: n });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(FitError::NonFiniteData);
    }
    let weights = match sigmas {
        Some(s) => {
            if s.len() != n {
                return Err(FitError::LengthMismatch { x: n, y: s.len() });
            }
            if s.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
                return Err(FitError::BadSigmas);
            }
            s.iter().map(|&v| 1.0 / v).collect::<Vec<f64>>()
        }
        None => vec![1.0; n],
    };
    model.validate_domain(xs)?;

    let lower = model.lower_bounds();
    let upper = model.upper_bounds();
    let mut params = match init {
        Some(p) => {
            if p.len() != n_params {
                return Err(FitError::LengthMismatch { x: n_params, y: p.len() });
            }
            p.to_vec()
        }
        None => model.initial_guess(xs, ys)?,
    };
    if params.iter().any(|v| !v.is_finite()) {
        return Err(FitError::BadInitial);
    }
    clamp(&mut params, &lower, &upper);

    let cost_of = |p: &[f64]| -> f64 {
        let mut c = 0.0;
        for i in 0..n {
            let r = weights[i] * (ys[i] - model.eval(xs[i], p));
            c += r * r;
        }
        c
    };

    let mut cost = cost_of(&params);
    if !cost.is_finite() {
        return Err(FitError::BadInitial);
    }
    let mut cost_trace = vec![cost];
    let mut lambda = LAMBDA_INIT;
    let mut iterations = 0;
    let mut converged = false;
    let mut row = vec![0.0f64; n_params];

    while iterations < MAX_ITERATIONS {
        // Weighted Jacobian and gradient at the current point.
        let mut jtj = DMatrix::<f64>::zeros(n_params, n_params);
        let mut jtr = DVector::<f64>::zeros(n_params);
        for i in 0..n {
            model.jacobian_row(xs[i], &params, &mut row);
            let r = weights[i] * (ys[i] - model.eval(xs[i], &params));
            for a in 0..n_params {
                let ja = weights[i] * row[a];
                jtr[a] += ja * r;
                for b in a..n_params {
                    jtj[(a, b)] += ja * weights[i] * row[b];
                }
            }
        }
        for a in 0..n_params {
            for b in 0..a {
                jtj[(a, b)] = jtj[(b, a)];
            }
        }
        if jtj.iter().chain(jtr.iter()).any(|v| !v.is_finite()) {
            return Err(FitError::BadInitial);
        }

        // Projected gradient: directions blocked by an active bound do
        // not count towards convergence.
        let mut grad_norm2 = 0.0;
        for a in 0..n_params {
            let g = jtr[a];
            let blocked = (params[a] <= lower[a] && g < 0.0) || (params[a] >= upper[a] && g > 0.0);
            if !blocked {
                grad_norm2 += g * g;
            }
        }
        if grad_norm2.sqrt() < GRADIENT_TOL * (1.0 + cost) {
            converged = true;
            break;
        }

        // Try damped steps until one lowers the cost. Parameters with an
        // exactly zero Jacobian column get a token positive diagonal so
        // the solve block-decouples and leaves them untouched (their
        // right-hand side is zero as well).
        let max_diag = (0..n_params).map(|a| jtj[(a, a)]).fold(0.0f64, f64::max);
        let dead_floor = (max_diag * 1e-12).max(f64::MIN_POSITIVE);
        let mut stepped = false;
        while lambda <= LAMBDA_MAX {
            let mut damped = jtj.clone();
            for a in 0..n_params {
                let base = if jtj[(a, a)] > 0.0 { jtj[(a, a)] } else { dead_floor };
                damped[(a, a)] = base * (1.0 + lambda);
            }
            let delta = match Cholesky::new(damped) {
                Some(ch) => ch.solve(&jtr),
                None => {
                    lambda *= 4.0;
                    continue;
                }
            };
            let mut trial: Vec<f64> = params.iter().zip(delta.iter()).map(|(p, d)| p + d).collect();
            clamp(&mut trial, &lower, &upper);
            let trial_cost = cost_of(&trial);
            if trial_cost.is_finite() && trial_cost < cost {
                params = trial;
                cost = trial_cost;
                cost_trace.push(cost);
                lambda = (lambda / 3.0).max(1e-14);
                stepped = true;
                break;
            }
            lambda *= 4.0;
        }
        if !stepped {
            // Damping is exhausted: no direction lowers the cost, so we
            // sit at a (possibly constrained) optimum that the gradient
            // test has not certified. Return the partial result with
            // `converged` false rather than discarding it.
            break;
        }
        iterations += 1;
    }

    // Gauss-Newton covariance at the optimum.
    let mut jtj = DMatrix::<f64>::zeros(n_params, n_params);
    for i in 0..n {
        model.jacobian_row(xs[i], &params, &mut row);
        for a in 0..n_params {
            for b in a..n_params {
                jtj[(a, b)] += weights[i] * weights[i] * row[a] * row[b];
            }
        }
    }
    for a in 0..n_params {
        for b in 0..a {
            jtj[(a, b)] = jtj[(b, a)];
        }
    }
    let covariance_scale = if sigmas.is_some() {
        1.0
    } else if n > n_params {
        cost / (n - n_params) as f64
    } else {
        0.0
    };
    // Equilibrate to the correlation form before factorizing so the
    // rank test is invariant under parameter rescaling; a Cholesky pivot
    // collapsing below 1e-10 (in remaining-variance-fraction units)
    // marks a direction the data cannot resolve.
    let diag: Vec<f64> = (0..n_params).map(|a| jtj[(a, a)]).collect();
    let corr = DMatrix::<f64>::from_fn(n_params, n_params, |a, b| {
        jtj[(a, b)] / (diag[a] * diag[b]).sqrt()
    });
    let factor = if diag.iter().all(|&d| d > 0.0) { Cholesky::new(corr) } else { None };
    let (uncertainties, degenerate) = match factor {
        Some(ch)
            if (0..n_params).all(|a| {
                let pivot = ch.l_dirty()[(a, a)];
                pivot * pivot > 1e-10
            }) =>
        {
            let inv = ch.inverse();
            let sig = (0..n_params)
                .map(|a| (covariance_scale * inv[(a, a)] / diag[a]).max(0.0).sqrt())
                .collect();
            (sig, false)
        }
        // Singular at the optimum: the parameters are still the
        // least-squares answer but their uncertainties are undefined.
        _ => (vec![f64::NAN; n_params], true),
    };

    Ok(FitOutcome {
        model: model.name(),
        param_names: model.param_names().to_vec(),
        params,
        uncertainties,
        cost,
        iterations,
        converged,
        degenerate,
        cost_trace,
    })
}

fn clamp(params: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((p, &lo), &hi) in params.iter_mut().zip(lower).zip(upper) {
        *p = p.clamp(lo, hi);
    }
}

/// Direct periodogram peak used to seed oscillatory fits.
///
/// Scans angular frequencies from below one cycle per span up to the
/// Nyquist rate of the median spacing, oversampled eightfold relative to
/// the natural spectral bin `2 pi / span`; returns the power argmax of
/// the mean-subtracted data.
pub fn dominant_angular_frequency(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 4 {
        return 0.0;
    }
    let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = x_max - x_min;
    if !span.is_finite() || span <= 0.0 {
        return 0.0;
    }
    let mut dxs: Vec<f64> = {
        let mut sorted = xs[..n].to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted.windows(2).map(|w| w[1] - w[0]).filter(|&d| d > 0.0).collect()
    };
    if dxs.is_empty() {
        return 0.0;
    }
    dxs.sort_by(f64::total_cmp);
    let dx_med = dxs[dxs.len() / 2];

    let mean = ys[..n].iter().sum::<f64>() / n as f64;
    let bin = 2.0 * std::f64::consts::PI / span;
    let omega_max = std::f64::consts::PI / dx_med;
    let step = bin / 8.0;
    let steps = ((omega_max - step) / step).ceil() as usize;

    let mut best = (0.0f64, 0.0f64);
    for k in 1..=steps.max(1) {
        let omega = step * k as f64;
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for i in 0..n {
            let (s, c) = (omega * (xs[i] - x_min)).sin_cos();
            let y = ys[i] - mean;
            re += y * c;
            im += y * s;
        }
        let power = re * re + im * im;
        if power > best.1 {
            best = (omega, power);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn line_fit_round_trips_exactly() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let out = fit(&Model::Line, &xs, &ys, None, None).unwrap();
        assert!(out.converged);
        assert_abs_diff_eq!(out.params[0], 2.5, epsilon = 1e-10);
        assert_abs_diff_eq!(out.params[1], -1.0, epsilon = 1e-10);
    }

    #[test]
    fn accepted_costs_are_monotone() {
        let xs: Vec<f64> = (0..120).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> =
            xs.iter().map(|&x| 0.8 * (0.9 * x).cos() * (-x / 20.0).exp() + 0.1).collect();
        let out = fit(&Model::Rabi, &xs, &ys, None, None).unwrap();
        assert!(out.cost_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(out.converged);
    }

    #[test]
    fn periodogram_seed_lands_within_one_bin() {
        let n = 200usize;
        let dt = 0.05;
        let omega_true = 3.7;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (omega_true * x).cos() + 0.2).collect();
        let est = dominant_angular_frequency(&xs, &ys);
        let bin = 2.0 * std::f64::consts::PI / (dt * (n - 1) as f64);
        assert!((est - omega_true).abs() <= bin, "estimate {est} vs true {omega_true} (bin {bin})");
    }

    #[test]
    fn degenerate_optimum_is_flagged_with_nan_sigmas() {
        // A constant x axis leaves the slope/intercept split of a line
        // unconstrained; the partial result is returned and flagged.
        let xs = vec![1.0; 10];
        let ys: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let out = fit(&Model::Line, &xs, &ys, None, None).unwrap();
        assert!(out.degenerate);
        assert!(out.uncertainties.iter().all(|s| s.is_nan()));
        // The reachable combination is pinned down even though the split
        // is not: the prediction at x = 1 equals the data mean.
        assert_abs_diff_eq!(out.params[0] + out.params[1], 4.5, epsilon = 1e-6);
    }

    #[test]
    fn constant_data_oscillation_fit_is_flagged_degenerate() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let ys = vec![0.7; 40];
        let out = fit(&Model::Ramsey, &xs, &ys, None, None).unwrap();
        assert!(out.degenerate);
        assert!(out.params[0].abs() < 1e-9, "amplitude {}", out.params[0]);
        assert_abs_diff_eq!(out.params[5], 0.7, epsilon = 1e-9);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let xs = vec![0.0, 1.0, 2.0];
        let ys = vec![0.0, 1.0];
        assert!(matches!(
            fit(&Model::Line, &xs, &ys, None, None),
            Err(FitError::LengthMismatch { .. })
        ));
        let ys = vec![0.0, f64::NAN, 2.0];
        assert!(matches!(fit(&Model::Line, &xs, &ys, None, None), Err(FitError::NonFiniteData)));
        let ys = vec![0.0, 1.0, 2.0];
        let sig = vec![1.0, -1.0, 1.0];
        assert!(matches!(fit(&Model::Line, &xs, &ys, Some(&sig), None), Err(FitError::BadSigmas)));
    }
}
