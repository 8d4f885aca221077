//! Two-state telegraph simulation and readout statistics.
//!
//! The simulator realizes a continuous-time two-state Markov chain with
//! exponential dwells, integrates the two signal levels time-weighted over
//! each sampling bin (so bins containing a switch take intermediate
//! values), and adds Gaussian read noise per bin.
//!
//! The dwell analysis thresholds a trace, merges single-sample blips (the
//! only smoothing applied; a minimal detector-bandwidth model) and
//! averages run lengths per state. Because dwells shorter than the
//! detection width of about 1.5 bins are invisible, the raw run-length
//! mean of an exponential dwell distribution is biased: memorylessness
//! shifts the visible-run mean up by the detection width, and every
//! invisible dwell of the opposite state concatenates two runs. Both
//! effects are undone by a self-consistent correction, keeping the
//! round-trip accurate even at moderately coarse sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use thiserror::Error;

use crate::fit::{fit, FitError, FitModel, FitOutcome};

/// Errors raised by telegraph simulation and analysis.
#[derive(Debug, Error)]
pub enum TelegraphError {
    /// A named parameter was NaN or infinite.
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    /// Dwell times must be strictly positive.
    #[error("dwell times must be positive, got {0}")]
    NonPositiveDwell(f64),
    /// The sampling interval must be strictly positive.
    #[error("sampling interval must be positive, got {0}")]
    NonPositiveDt(f64),
    /// The noise width must be non-negative.
    #[error("noise sigma must be non-negative, got {0}")]
    NegativeNoise(f64),
    /// The duration must be non-negative.
    #[error("duration must be non-negative, got {0}")]
    NegativeDuration(f64),
    /// An operation needed a non-empty trace.
    #[error("trace is empty")]
    EmptyTrace,
    /// Histogramming needs at least two bins.
    #[error("histogram needs at least {min} bins, got {got}")]
    TooFewBins { min: usize, got: usize },
    /// The double-Gaussian fit needs enough occupied bins.
    #[error("double-Gaussian fit needs at least 6 bins with nonzero counts, got {0}")]
    TooFewOccupiedBins(usize),
    /// Fidelity estimation needs non-empty shot sets.
    #[error("shot set is empty")]
    EmptyShots,
    /// The dwell threshold was NaN or infinite.
    #[error("threshold must be finite")]
    BadThreshold,
    /// A least-squares step underneath failed.
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Parameters of a simulated telegraph process.
///
/// State `a` and state `b` alternate with exponential dwell times; the
/// detector reports `level_a` or `level_b` plus Gaussian noise,
/// integrated over bins of `dt_us`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelegraphSpec {
    /// Mean dwell time of state `a` (us).
    pub dwell_a_us: f64,
    /// Mean dwell time of state `b` (us).
    pub dwell_b_us: f64,
    /// Signal level of state `a`.
    pub level_a: f64,
    /// Signal level of state `b`.
    pub level_b: f64,
    /// Gaussian read-noise width per sample (signal units).
    pub noise_sigma: f64,
    /// Sampling interval (us).
    pub dt_us: f64,
    /// Total trace duration (s).
    pub duration_s: f64,
    /// Seed of the deterministic random stream.
    pub rng_seed: u64,
}

impl TelegraphSpec {
    /// Rejects non-finite or non-physical parameters.
    pub fn validate(&self) -> Result<(), TelegraphError> {
        for (name, value) in [
            ("dwell_a_us", self.dwell_a_us),
            ("dwell_b_us", self.dwell_b_us),
            ("level_a", self.level_a),
            ("level_b", self.level_b),
            ("noise_sigma", self.noise_sigma),
            ("dt_us", self.dt_us),
            ("duration_s", self.duration_s),
        ] {
            if !value.is_finite() {
                return Err(TelegraphError::NonFinite { name, value });
            }
        }
        if self.dwell_a_us <= 0.0 {
            return Err(TelegraphError::NonPositiveDwell(self.dwell_a_us));
        }
        if self.dwell_b_us <= 0.0 {
            return Err(TelegraphError::NonPositiveDwell(self.dwell_b_us));
        }
        if self.dt_us <= 0.0 {
            return Err(TelegraphError::NonPositiveDt(self.dt_us));
        }
        if self.noise_sigma < 0.0 {
            return Err(TelegraphError::NegativeNoise(self.noise_sigma));
        }
        if self.duration_s < 0.0 {
            return Err(TelegraphError::NegativeDuration(self.duration_s));
        }
        Ok(())
    }

    /// True when the sampling is too coarse to resolve the faster state
    /// comfortably (`dt >= min(dwell)/5`).
    pub fn coarse_sampling(&self) -> bool {
        self.dt_us >= self.dwell_a_us.min(self.dwell_b_us) / 5.0
    }

    /// Stationary occupation of state `a`.
    pub fn stationary_a(&self) -> f64 {
        self.dwell_a_us / (self.dwell_a_us + self.dwell_b_us)
    }
}

/// A uniformly sampled readout trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TelegraphTrace {
    /// Sampling interval (us).
    pub dt_us: f64,
    /// Bin-integrated signal samples.
    pub samples: Vec<f64>,
}

impl TelegraphTrace {
    /// Number of samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// True when the trace holds no samples.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Simulates a telegraph trace; identical spec gives identical samples.
pub fn simulate_telegraph(spec: &TelegraphSpec) -> Result<TelegraphTrace, TelegraphError> {
    spec.validate()?;
    let n_samples = (spec.duration_s * 1e6 / spec.dt_us).round() as usize;
    let mut samples = Vec::with_capacity(n_samples);
    if n_samples == 0 {
        return Ok(TelegraphTrace { dt_us: spec.dt_us, samples });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let exp_a = Exp::new(1.0 / spec.dwell_a_us).expect("positive rate");
    let exp_b = Exp::new(1.0 / spec.dwell_b_us).expect("positive rate");
    let noise = if spec.noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.noise_sigma).expect("valid noise width"))
    } else {
        None
    };

    // Start from the stationary distribution.
    let mut in_a = rng.random::<f64>() < spec.stationary_a();
    let mut next_switch = if in_a { exp_a.sample(&mut rng) } else { exp_b.sample(&mut rng) };

    let dt = spec.dt_us;
    for k in 0..n_samples {
        let bin_start = k as f64 * dt;
        let bin_end = bin_start + dt;
        let mut t = bin_start;
        let mut weighted = 0.0;
        while next_switch < bin_end {
            let level = if in_a { spec.level_a } else { spec.level_b };
            weighted += (next_switch - t) * level;
            t = next_switch;
            in_a = !in_a;
            next_switch += if in_a { exp_a.sample(&mut rng) } else { exp_b.sample(&mut rng) };
        }
        let level = if in_a { spec.level_a } else { spec.level_b };
        weighted += (bin_end - t) * level;
        let mut value = weighted / dt;
        if let Some(n) = &noise {
            value += n.sample(&mut rng);
        }
        samples.push(value);
    }
    Ok(TelegraphTrace { dt_us: spec.dt_us, samples })
}

/// Dwell statistics of one threshold side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellStats {
    /// Bias-corrected mean dwell time (us); NaN when no complete run of
    /// this state was observed.
    pub mean_us: f64,
    /// Plain average of the visible run lengths (us), uncorrected.
    pub raw_mean_us: f64,
    /// One-sigma uncertainty from the run count (exponential dwells have
    /// a standard deviation equal to the mean).
    pub sigma_us: f64,
    /// Number of complete (non-censored) runs.
    pub count: usize,
    /// Fraction of all samples classified to this side.
    pub population: f64,
}

/// Result of thresholding a trace into alternating dwells.
#[derive(Debug, Clone, PartialEq)]
pub struct DwellReport {
    /// Statistics of the side below the threshold.
    pub low: DwellStats,
    /// Statistics of the side above the threshold.
    pub high: DwellStats,
    /// Number of state changes after blip merging.
    pub transitions: usize,
    /// True when fewer than 5 transitions were observed.
    pub low_confidence: bool,
    /// The threshold that was applied.
    pub threshold: f64,
}

/// Effective detection width of the thresholded run analysis, in bins.
///
/// A dwell survives classification and blip merging when it dominates at
/// least two sampling bins; averaged over bin offsets the survival
/// boundary sits at 1.5 bins.
const DETECTION_WIDTH_BINS: f64 = 1.5;

/// Thresholds a trace and extracts dwell-time statistics.
///
/// Samples at or above `threshold` count as the high state. Isolated
/// single-sample runs are merged into their surroundings, censored
/// boundary runs are dropped from the statistics, and the run-length
/// means are corrected for invisible short dwells as described in the
/// module docs.
pub fn dwell_times(trace: &TelegraphTrace, threshold: f64) -> Result<DwellReport, TelegraphError> {
    if !threshold.is_finite() {
        return Err(TelegraphError::BadThreshold);
    }
    if trace.is_empty() {
        return Err(TelegraphError::EmptyTrace);
    }

    // Run-length encode the thresholded trace, merging single-sample
    // blips into the surrounding state as they appear.
    let mut runs: Vec<(bool, usize)> = Vec::new();
    for &v in &trace.samples {
        let high = v >= threshold;
        match runs.last_mut() {
            Some((state, len)) if *state == high => *len += 1,
            _ => {
                // A completed interior single-sample run is a blip: fold
                // it into the previous run, which shares this sample's
                // state because runs alternate.
                if runs.len() >= 2 && runs.last().is_some_and(|&(_, len)| len == 1) {
                    let (_, blip_len) = runs.pop().expect("just checked");
                    let last = runs.last_mut().expect("len >= 2");
                    last.1 += blip_len + 1;
                } else {
                    runs.push((high, 1));
                }
            }
        }
    }

    let transitions = runs.len().saturating_sub(1);
    let dt = trace.dt_us;
    let total = trace.samples.len() as f64;
    let high_samples: usize = runs.iter().filter(|&&(s, _)| s).map(|&(_, l)| l).sum();
    let population_high = high_samples as f64 / total;

    // Complete runs exclude the censored first and last.
    let interior = if runs.len() > 2 { &runs[1..runs.len() - 1] } else { &[][..] };
    let collect = |want: bool| -> (usize, f64) {
        let mut count = 0usize;
        let mut sum = 0.0f64;
        for &(state, len) in interior {
            if state == want {
                count += 1;
                sum += len as f64 * dt;
            }
        }
        (count, sum)
    };
    let (n_low, sum_low) = collect(false);
    let (n_high, sum_high) = collect(true);
    let raw_low = if n_low > 0 { sum_low / n_low as f64 } else { f64::NAN };
    let raw_high = if n_high > 0 { sum_high / n_high as f64 } else { f64::NAN };

    let (mean_low, mean_high) = corrected_means(raw_low, raw_high, dt);
    let stats = |raw: f64, mean: f64, count: usize, population: f64| DwellStats {
        mean_us: mean,
        raw_mean_us: raw,
        sigma_us: if count > 0 { mean / (count as f64).sqrt() } else { f64::NAN },
        count,
        population,
    };
    Ok(DwellReport {
        low: stats(raw_low, mean_low, n_low, 1.0 - population_high),
        high: stats(raw_high, mean_high, n_high, population_high),
        transitions,
        low_confidence: transitions < 5,
        threshold,
    })
}

/// Undoes the finite-sampling bias of the visible-run means.
///
/// With a detection cutoff `c`, memorylessness gives
/// `raw = c + mean / (1 - p_other)` where `p_other = 1 - exp(-c / mean_other)`
/// is the probability that an opposite-state dwell is invisible and
/// concatenates two runs. The pair of equations is solved by fixed-point
/// iteration; when a raw mean is at or below the cutoff the correction is
/// skipped for that side.
fn corrected_means(raw_low: f64, raw_high: f64, dt: f64) -> (f64, f64) {
    let cutoff = DETECTION_WIDTH_BINS * dt;
    let mut low = raw_low;
    let mut high = raw_high;
    // NaN raw means (no runs observed) also land here and pass through.
    let correctable = raw_low > cutoff && raw_high > cutoff;
    if !correctable {
        return (low, high);
    }
    for _ in 0..64 {
        let new_low = (raw_low - cutoff) * (-cutoff / high).exp();
        let new_high = (raw_high - cutoff) * (-cutoff / low).exp();
        let shift = (new_low - low).abs() + (new_high - high).abs();
        low = new_low;
        high = new_high;
        if shift < 1e-12 * (low + high) {
            break;
        }
    }
    (low.max(f64::MIN_POSITIVE), high.max(f64::MIN_POSITIVE))
}

/// Histogram of a sample sequence over its full range.
///
/// Returns `(bin_center, count)` pairs; counts are f64 so they can feed
/// the least-squares machinery directly.
pub fn histogram(samples: &[f64], n_bins: usize) -> Result<Vec<(f64, f64)>, TelegraphError> {
    if samples.is_empty() {
        return Err(TelegraphError::EmptyTrace);
    }
    if n_bins < 2 {
        return Err(TelegraphError::TooFewBins { min: 2, got: n_bins });
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / n_bins as f64 } else { 1.0 };
    let mut counts = vec![0.0f64; n_bins];
    for &v in samples {
        let idx = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[idx] += 1.0;
    }
    Ok(counts.into_iter().enumerate().map(|(i, c)| (lo + width * (i as f64 + 0.5), c)).collect())
}

/// Sum of two Gaussians; parameters `[a1, m1, s1, a2, m2, s2]`.
struct DoubleGaussian;

impl FitModel for DoubleGaussian {
    fn name(&self) -> &'static str {
        "double_gaussian"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["amp1", "mean1", "sigma1", "amp2", "mean2", "sigma2"]
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let g = |a: f64, m: f64, s: f64| {
            let z = (x - m) / s;
            a * (-0.5 * z * z).exp()
        };
        g(p[0], p[1], p[2]) + g(p[3], p[4], p[5])
    }

    fn jacobian_row(&self, x: f64, p: &[f64], out: &mut [f64]) {
        for base in [0usize, 3] {
            let (a, m, s) = (p[base], p[base + 1], p[base + 2]);
            let z = (x - m) / s;
            let e = (-0.5 * z * z).exp();
            out[base] = e;
            out[base + 1] = a * e * z / s;
            out[base + 2] = a * e * z * z / s;
        }
    }

    fn lower_bounds(&self) -> Vec<f64> {
        let tiny = f64::MIN_POSITIVE;
        vec![0.0, f64::NEG_INFINITY, tiny, 0.0, f64::NEG_INFINITY, tiny]
    }

    fn initial_guess(&self, xs: &[f64], ys: &[f64]) -> Result<Vec<f64>, FitError> {
        let total: f64 = ys.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(FitError::NonFiniteData);
        }
        let mean = xs.iter().zip(ys).map(|(x, y)| x * y).sum::<f64>() / total;
        let var = xs.iter().zip(ys).map(|(x, y)| y * (x - mean) * (x - mean)).sum::<f64>() / total;
        let spread = var.sqrt().max(f64::MIN_POSITIVE);

        let peak1 = argmax_by(ys);
        let (a1, x1) = (ys[peak1], xs[peak1]);
        let s1 = half_max_sigma(xs, ys, peak1, a1).unwrap_or(0.5 * spread).max(f64::MIN_POSITIVE);

        // Second seed: tallest positive residual after subtracting the
        // first peak, outside its core. A plain tallest-far-bin cut fails
        // for strongly imbalanced populations, where the shoulder of the
        // majority peak outgrows the whole minority peak.
        let residual: Vec<f64> = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| {
                let z = (x - x1) / s1;
                (y - a1 * (-0.5 * z * z).exp()).max(0.0)
            })
            .collect();
        let peak2 = xs
            .iter()
            .enumerate()
            .filter(|&(i, &x)| (x - x1).abs() > 2.0 * s1 && residual[i] > 0.0)
            .max_by(|a, b| residual[a.0].total_cmp(&residual[b.0]))
            .map(|(i, _)| i);
        let (a2, x2, s2) = match peak2 {
            Some(i) => {
                let s2 = half_max_sigma(xs, &residual, i, residual[i])
                    .unwrap_or(s1)
                    .max(f64::MIN_POSITIVE);
                (residual[i].max(total * 1e-6), xs[i], s2)
            }
            None => (a1 / 10.0, x1 + spread, s1),
        };
        Ok(vec![a1, x1, s1, a2, x2, s2])
    }
}

/// Width estimate from the half-maximum points around a peak bin.
///
/// Walks outward from `peak` until the counts drop to half of `top`; the
/// mean one-sided half width maps to a Gaussian sigma through the factor
/// sqrt(2 ln 2). Returns `None` when the counts never descend that far
/// on either side.
fn half_max_sigma(xs: &[f64], ys: &[f64], peak: usize, top: f64) -> Option<f64> {
    let half = 0.5 * top;
    let left = (0..peak).rev().find(|&i| ys[i] <= half).map(|i| xs[peak] - xs[i]);
    let right = (peak + 1..xs.len()).find(|&i| ys[i] <= half).map(|i| xs[i] - xs[peak]);
    let found: Vec<f64> = [left, right].into_iter().flatten().collect();
    if found.is_empty() {
        return None;
    }
    let mean_width = found.iter().sum::<f64>() / found.len() as f64;
    Some(mean_width / (2.0 * 2.0f64.ln()).sqrt())
}

fn argmax_by(ys: &[f64]) -> usize {
    let mut best = 0;
    for (i, &y) in ys.iter().enumerate() {
        if y > ys[best] {
            best = i;
        }
    }
    best
}

/// Two-component Gaussian decomposition of a readout histogram.
#[derive(Debug, Clone)]
pub struct DoubleGaussianFit {
    /// Mean of the lower-signal component.
    pub mean_low: f64,
    /// Width of the lower-signal component.
    pub sigma_low: f64,
    /// Amplitude of the lower-signal component.
    pub amplitude_low: f64,
    /// Mean of the upper-signal component.
    pub mean_high: f64,
    /// Width of the upper-signal component.
    pub sigma_high: f64,
    /// Amplitude of the upper-signal component.
    pub amplitude_high: f64,
    /// Normalized area of the lower component.
    pub population_low: f64,
    /// Normalized area of the upper component.
    pub population_high: f64,
    /// True when the two means are closer than half the larger width,
    /// i.e. the histogram is effectively single-peaked.
    pub merged: bool,
    /// Underlying least-squares outcome.
    pub outcome: FitOutcome,
}

/// Fits two Gaussians to a histogram and derives peak populations.
///
/// Populations are the normalized component areas `a sigma`. Requires at
/// least six occupied bins; peaks closer than half a width are flagged
/// as merged rather than rejected.
///
/// The solve runs on standardized data (bin centers in units of the
/// count-weighted spread, counts in units of the tallest bin) and maps
/// the parameters back afterwards. Raw histograms mix scales of order
/// 1e-1 and 1e4, which keeps the optimizer's gradient criterion out of
/// reach; the fit itself is scale-equivariant, so this changes only the
/// conditioning.
pub fn double_gaussian_fit(histogram: &[(f64, f64)]) -> Result<DoubleGaussianFit, TelegraphError> {
    let occupied = histogram.iter().filter(|&&(_, c)| c > 0.0).count();
    if occupied < 6 {
        return Err(TelegraphError::TooFewOccupiedBins(occupied));
    }
    let xs: Vec<f64> = histogram.iter().map(|&(x, _)| x).collect();
    let ys: Vec<f64> = histogram.iter().map(|&(_, c)| c).collect();

    let total: f64 = ys.iter().sum();
    let x0 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / total;
    let x_scale = (xs.iter().zip(&ys).map(|(x, y)| y * (x - x0) * (x - x0)).sum::<f64>() / total)
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let y_scale = ys.iter().fold(f64::MIN_POSITIVE, |a, &b| a.max(b));
    let xs_w: Vec<f64> = xs.iter().map(|x| (x - x0) / x_scale).collect();
    let ys_w: Vec<f64> = ys.iter().map(|y| y / y_scale).collect();

    let mut outcome = fit(&DoubleGaussian, &xs_w, &ys_w, None, None)?;
    for component in [0, 3] {
        outcome.params[component] *= y_scale;
        outcome.params[component + 1] = x0 + outcome.params[component + 1] * x_scale;
        outcome.params[component + 2] *= x_scale;
        outcome.uncertainties[component] *= y_scale;
        outcome.uncertainties[component + 1] *= x_scale;
        outcome.uncertainties[component + 2] *= x_scale;
    }
    outcome.cost *= y_scale * y_scale;
    for cost in &mut outcome.cost_trace {
        *cost *= y_scale * y_scale;
    }

    let p = &outcome.params;
    let (first, second) = if p[1] <= p[4] { (0, 3) } else { (3, 0) };
    let (a1, m1, s1) = (p[first], p[first + 1], p[first + 2]);
    let (a2, m2, s2) = (p[second], p[second + 1], p[second + 2]);
    let area1 = a1 * s1;
    let area2 = a2 * s2;
    let total = area1 + area2;
    let (pop1, pop2) =
        if total > 0.0 { (area1 / total, area2 / total) } else { (f64::NAN, f64::NAN) };
    // Effectively single-peaked: means closer than half the larger width,
    // or one component has vanished (the degenerate limit of the same
    // situation).
    let minority = pop1.min(pop2);
    let merged = (m2 - m1).abs() < 0.5 * s1.max(s2) || minority.is_nan() || minority < 1e-3;

    Ok(DoubleGaussianFit {
        mean_low: m1,
        sigma_low: s1,
        amplitude_low: a1,
        mean_high: m2,
        sigma_high: s2,
        amplitude_high: a2,
        population_low: pop1,
        population_high: pop2,
        merged,
        outcome,
    })
}

/// A set of single-shot readout values, complex or scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotSet {
    /// Shot values in the readout plane; scalar data uses `(value, 0)`.
    pub shots: Vec<(f64, f64)>,
    /// Optional integration time per shot (ns), metadata only.
    pub integration_ns: Option<f64>,
}

impl ShotSet {
    /// Wraps complex-plane shots.
    pub fn new(shots: Vec<(f64, f64)>) -> Self {
        Self { shots, integration_ns: None }
    }

    /// Wraps scalar shots on the real axis.
    pub fn scalar(values: Vec<f64>) -> Self {
        Self { shots: values.into_iter().map(|v| (v, 0.0)).collect(), integration_ns: None }
    }

    /// Number of shots.
    pub fn len(&self) -> usize {
        self.shots.len()
    }

    /// True when the set holds no shots.
    pub fn is_empty(&self) -> bool {
        self.shots.is_empty()
    }

    fn mean(&self) -> (f64, f64) {
        let n = self.shots.len() as f64;
        let (sx, sy) = self.shots.iter().fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x, ay + y));
        (sx / n, sy / n)
    }
}

/// Threshold-grid resolution of the fidelity search; the returned
/// threshold is optimal to within one grid bin.
pub const FIDELITY_THRESHOLD_BINS: usize = 512;

/// Single-shot assignment fidelity between two labelled shot sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityReport {
    /// Assignment fidelity `1 - (P(g|e) + P(e|g)) / 2`.
    pub fidelity: f64,
    /// Optimal threshold along the projection axis (measured from the
    /// ground-set mean).
    pub threshold: f64,
    /// Probability of classifying an excited shot as ground.
    pub p_ground_given_excited: f64,
    /// Probability of classifying a ground shot as excited.
    pub p_excited_given_ground: f64,
    /// Unit projection axis from the ground mean to the excited mean.
    pub axis: (f64, f64),
    /// True when the sets are indistinguishable (fidelity 0.5).
    pub degenerate: bool,
}

/// Computes the assignment fidelity of two shot clouds.
///
/// Shots are projected onto the axis joining the set means; the
/// threshold maximizing `1 - (P(g|e) + P(e|g)) / 2` is searched on a
/// uniform grid of [`FIDELITY_THRESHOLD_BINS`] candidate edges across
/// the projected range.
pub fn assignment_fidelity(
    ground: &ShotSet,
    excited: &ShotSet,
) -> Result<FidelityReport, TelegraphError> {
    if ground.is_empty() || excited.is_empty() {
        return Err(TelegraphError::EmptyShots);
    }
    for &(x, y) in ground.shots.iter().chain(&excited.shots) {
        if !x.is_finite() || !y.is_finite() {
            let value = if x.is_finite() { y } else { x };
            return Err(TelegraphError::NonFinite { name: "shots", value });
        }
    }
    let mg = ground.mean();
    let me = excited.mean();
    let (dx, dy) = (me.0 - mg.0, me.1 - mg.1);
    let norm = (dx * dx + dy * dy).sqrt();
    let axis = if norm > 0.0 { (dx / norm, dy / norm) } else { (1.0, 0.0) };

    let project = |set: &ShotSet| -> Vec<f64> {
        let mut v: Vec<f64> =
            set.shots.iter().map(|&(x, y)| (x - mg.0) * axis.0 + (y - mg.1) * axis.1).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let pg = project(ground);
    let pe = project(excited);

    let lo = pg[0].min(pe[0]);
    let hi = pg[pg.len() - 1].max(pe[pe.len() - 1]);
    if hi <= lo {
        return Ok(FidelityReport {
            fidelity: 0.5,
            threshold: lo,
            p_ground_given_excited: 0.5,
            p_excited_given_ground: 0.5,
            axis,
            degenerate: true,
        });
    }

    // Classified excited at projection >= threshold.
    let frac_below = |sorted: &[f64], t: f64| -> f64 {
        sorted.partition_point(|&v| v < t) as f64 / sorted.len() as f64
    };
    let step = (hi - lo) / FIDELITY_THRESHOLD_BINS as f64;
    let mut best = (f64::NEG_INFINITY, lo, 0.0, 0.0);
    for k in 0..=FIDELITY_THRESHOLD_BINS {
        let t = lo + step * k as f64;
        let p_ge = frac_below(&pe, t);
        let p_eg = 1.0 - frac_below(&pg, t);
        let fidelity = 1.0 - 0.5 * (p_ge + p_eg);
        if fidelity > best.0 {
            best = (fidelity, t, p_ge, p_eg);
        }
    }
    let (fidelity, threshold, p_ge, p_eg) = best;
    Ok(FidelityReport {
        fidelity,
        threshold,
        p_ground_given_excited: p_ge,
        p_excited_given_ground: p_eg,
        axis,
        degenerate: fidelity <= 0.5 + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(dwell_a: f64, dwell_b: f64, duration_s: f64, seed: u64) -> TelegraphSpec {
        TelegraphSpec {
            dwell_a_us: dwell_a,
            dwell_b_us: dwell_b,
            level_a: 1.0,
            level_b: 0.0,
            noise_sigma: 0.05,
            dt_us: 1.0,
            duration_s,
            rng_seed: seed,
        }
    }

    #[test]
    fn simulation_is_reproducible_and_sized() {
        let s = spec(40.0, 80.0, 0.01, 7);
        let a = simulate_telegraph(&s).unwrap();
        let b = simulate_telegraph(&s).unwrap();
        assert_eq!(a.samples.len(), 10_000);
        assert_eq!(a, b);
        let c = simulate_telegraph(&TelegraphSpec { rng_seed: 8, ..s }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_duration_gives_empty_trace() {
        let s = spec(40.0, 80.0, 0.0, 1);
        assert!(simulate_telegraph(&s).unwrap().is_empty());
    }

    #[test]
    fn symmetric_chain_occupies_each_level_evenly() {
        let s = TelegraphSpec { noise_sigma: 0.0, ..spec(50.0, 50.0, 0.5, 3) };
        let trace = simulate_telegraph(&s).unwrap();
        let mean = trace.samples.iter().sum::<f64>() / trace.len() as f64;
        assert!((mean - 0.5).abs() < 0.05, "occupation {mean}");
    }

    #[test]
    fn dwell_round_trip_recovers_both_means() {
        // level_a = 1 is the high state with the shorter dwell here.
        let s = spec(40.0, 160.0, 0.25, 11);
        let trace = simulate_telegraph(&s).unwrap();
        let report = dwell_times(&trace, 0.5).unwrap();
        assert!(!report.low_confidence);
        assert!(
            (report.high.mean_us - 40.0).abs() / 40.0 < 0.10,
            "high dwell {} vs 40",
            report.high.mean_us
        );
        assert!(
            (report.low.mean_us - 160.0).abs() / 160.0 < 0.10,
            "low dwell {} vs 160",
            report.low.mean_us
        );
    }

    #[test]
    fn constant_trace_is_flagged_not_fatal() {
        let trace = TelegraphTrace { dt_us: 1.0, samples: vec![0.0; 100] };
        let report = dwell_times(&trace, 0.5).unwrap();
        assert_eq!(report.transitions, 0);
        assert!(report.low_confidence);
        assert!(report.high.mean_us.is_nan());
    }

    #[test]
    fn single_sample_blips_are_merged() {
        let mut samples = vec![0.0; 10];
        samples.push(1.0);
        samples.extend(vec![0.0; 10]);
        let trace = TelegraphTrace { dt_us: 1.0, samples };
        let report = dwell_times(&trace, 0.5).unwrap();
        assert_eq!(report.transitions, 0);
        assert_abs_diff_eq!(report.low.population, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn double_gaussian_round_trips_on_clean_input() {
        let truth = [100.0, 0.0, 0.1, 900.0, 1.0, 0.12];
        let hist: Vec<(f64, f64)> = (0..120)
            .map(|i| {
                let x = -0.5 + i as f64 * (2.0 / 119.0);
                (x, DoubleGaussian.eval(x, &truth))
            })
            .collect();
        let fit = double_gaussian_fit(&hist).unwrap();
        assert!(!fit.merged);
        assert_abs_diff_eq!(fit.mean_low, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.mean_high, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.sigma_low, 0.1, epsilon = 1e-6);
        let expect_low = 100.0 * 0.1 / (100.0 * 0.1 + 900.0 * 0.12);
        assert_abs_diff_eq!(fit.population_low, expect_low, epsilon = 1e-6);
    }

    #[test]
    fn single_gaussian_is_flagged_merged() {
        let hist: Vec<(f64, f64)> = (0..60)
            .map(|i| {
                let x = -1.0 + i as f64 * (2.0 / 59.0);
                (x, 500.0 * (-0.5 * (x / 0.3) * (x / 0.3)).exp())
            })
            .collect();
        let fit = double_gaussian_fit(&hist).unwrap();
        assert!(fit.merged);
    }

    #[test]
    fn separated_clouds_have_unit_fidelity() {
        let ground = ShotSet::scalar((0..200).map(|i| i as f64 * 0.001).collect());
        let excited = ShotSet::scalar((0..200).map(|i| 10.0 + i as f64 * 0.001).collect());
        let report = assignment_fidelity(&ground, &excited).unwrap();
        assert_abs_diff_eq!(report.fidelity, 1.0, epsilon = 1e-12);
        assert!(!report.degenerate);
    }

    #[test]
    fn identical_clouds_are_degenerate() {
        let values: Vec<f64> = (0..100).map(|i| (i % 7) as f64).collect();
        let report =
            assignment_fidelity(&ShotSet::scalar(values.clone()), &ShotSet::scalar(values))
                .unwrap();
        assert_abs_diff_eq!(report.fidelity, 0.5, epsilon = 1e-9);
        assert!(report.degenerate);
    }

    #[test]
    fn reported_threshold_is_grid_optimal() {
        let ground = ShotSet::scalar((0..500).map(|i| (i as f64 / 500.0) * 2.0 - 1.0).collect());
        let excited = ShotSet::scalar((0..500).map(|i| 0.8 + (i as f64 / 500.0) * 2.0).collect());
        let report = assignment_fidelity(&ground, &excited).unwrap();
        let lo = -1.0f64;
        let hi = 2.8f64;
        let step = (hi - lo) / FIDELITY_THRESHOLD_BINS as f64;
        let eval = |t: f64| {
            let p_ge = excited.shots.iter().filter(|&&(x, _)| x < t).count() as f64 / 500.0;
            let p_eg = ground.shots.iter().filter(|&&(x, _)| x >= t).count() as f64 / 500.0;
            1.0 - 0.5 * (p_ge + p_eg)
        };
        // The projection here is the identity up to the ground mean shift.
        let shift = ground.shots.iter().map(|&(x, _)| x).sum::<f64>() / 500.0;
        let t = report.threshold + shift;
        assert!(eval(t + step) <= report.fidelity + 1e-12);
        assert!(eval(t - step) <= report.fidelity + 1e-12);
    }
}
