//! Weighted straight-line regression with parameter uncertainties.

use super::FitError;

/// Result of a straight-line least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    /// Best-fit slope.
    pub slope: f64,
    /// Best-fit intercept.
    pub intercept: f64,
    /// One-sigma uncertainty of the slope.
    pub slope_sigma: f64,
    /// One-sigma uncertainty of the intercept.
    pub intercept_sigma: f64,
    /// Weighted residual sum of squares at the optimum.
    pub rss: f64,
    /// Number of points.
    pub n: usize,
}

impl LinearFit {
    /// Fitted value at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Fits `y = slope x + intercept` by weighted least squares.
///
/// Weights are `1/sigma^2` when sigmas are given, uniform otherwise, and
/// x is centred around its weighted mean for numerical stability. With
/// explicit sigmas the uncertainties come from the unscaled covariance;
/// without, they are scaled by the reduced chi-square (zero when the fit
/// is exactly determined).
pub fn weighted_linear_fit(
    xs: &[f64],
    ys: &[f64],
    sigmas: Option<&[f64]>,
) -> Result<LinearFit, FitError> {
    let n = xs.len();
    if ys.len() != n {
        return Err(FitError::LengthMismatch { x: n, y: ys.len() });
    }
    if n < 2 {
        return Err(FitError::NotEnoughData { min: 2, got: n });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(FitError::NonFiniteData);
    }
    let weights: Vec<f64> = match sigmas {
        Some(s) => {
            if s.len() != n {
                return Err(FitError::LengthMismatch { x: n, y: s.len() });
            }
            if s.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
                return Err(FitError::BadSigmas);
            }
            s.iter().map(|&v| 1.0 / (v * v)).collect()
        }
        None => vec![1.0; n],
    };

    let w_sum: f64 = weights.iter().sum();
    let x_bar = xs.iter().zip(&weights).map(|(x, w)| w * x).sum::<f64>() / w_sum;
    let y_bar = ys.iter().zip(&weights).map(|(y, w)| w * y).sum::<f64>() / w_sum;

    let mut stt = 0.0;
    let mut sty = 0.0;
    for i in 0..n {
        let t = xs[i] - x_bar;
        stt += weights[i] * t * t;
        sty += weights[i] * t * (ys[i] - y_bar);
    }
    if !stt.is_finite() || stt <= 0.0 {
        return Err(FitError::RankDeficient);
    }

    let slope = sty / stt;
    let intercept = y_bar - slope * x_bar;
    let rss: f64 = (0..n)
        .map(|i| {
            let r = ys[i] - slope * xs[i] - intercept;
            weights[i] * r * r
        })
        .sum();

    let scale = if sigmas.is_some() {
        1.0
    } else if n > 2 {
        rss / (n - 2) as f64
    } else {
        0.0
    };
    let slope_var = scale / stt;
    let intercept_var = scale * (1.0 / w_sum + x_bar * x_bar / stt);

    Ok(LinearFit {
        slope,
        intercept,
        slope_sigma: slope_var.max(0.0).sqrt(),
        intercept_sigma: intercept_var.max(0.0).sqrt(),
        rss,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line_has_zero_residual() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 2.0).collect();
        let fit = weighted_linear_fit(&xs, &ys, None).unwrap();
        assert_abs_diff_eq!(fit.slope, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 2.0, epsilon = 1e-12);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn weights_pull_the_fit_towards_precise_points() {
        let xs = vec![0.0, 1.0, 2.0];
        let ys = vec![0.0, 1.0, 4.0];
        // Tight sigma on the outlier-free pair forces the line through it.
        let sigmas = vec![1e-6, 1e-6, 1e3];
        let fit = weighted_linear_fit(&xs, &ys, Some(&sigmas)).unwrap();
        assert_abs_diff_eq!(fit.slope, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.intercept, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn known_sigma_covariance_matches_closed_form() {
        // Unit sigmas on x = 0 and 1: var(slope) = 2, var(intercept) = 1.
        let xs = vec![0.0, 1.0];
        let ys = vec![0.3, 0.9];
        let sig = vec![1.0, 1.0];
        let fit = weighted_linear_fit(&xs, &ys, Some(&sig)).unwrap();
        assert_abs_diff_eq!(fit.slope_sigma, 2.0f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept_sigma, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_abscissa_is_rejected() {
        let xs = vec![2.0, 2.0, 2.0];
        let ys = vec![0.0, 1.0, 2.0];
        assert!(matches!(weighted_linear_fit(&xs, &ys, None), Err(FitError::RankDeficient)));
    }
}
