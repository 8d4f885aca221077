//! Flux and field sweeps, avoided-crossing detection, g-factor fits.
//!
//! Sweep points are computed independently (and in parallel), each point
//! carrying the labelled low-energy spectrum. A sequential pass then
//! follows every eigenbranch through the sweep by maximal eigenvector
//! overlap between adjacent points and flags points where that adiabatic
//! identity disagrees with the per-point product-state labels; the two
//! notions separate exactly inside avoided crossings.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{zeeman_from_field, BasisSpec, CircuitParams};
use crate::constants::MU_B_GHZ_PER_MT;
use crate::fit::linear::weighted_linear_fit;
use crate::fit::FitError;
use crate::spectrum::{solve_circuit, SpectrumError, Spin, StateLabel};

/// Errors raised by sweeps and their derived analyses.
#[derive(Debug, Error)]
pub enum SweepError {
    /// Diagonalization or labelling failed at a sweep point.
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    /// The grid has too few points for the requested operation.
    #[error("sweep grid must contain at least {min} points, got {got}")]
    GridTooSmall { min: usize, got: usize },
    /// A named branch could not be resolved at some sweep point.
    #[error("branch `{name}` is missing at sweep point {index}")]
    MissingBranch { name: String, index: usize },
    /// The two branches reach their minimum distance at the window edge;
    /// no interior crossing exists.
    #[error("branches `{a}` and `{b}` have no interior approach in the window")]
    NoCrossing { a: String, b: String },
    /// An unknown branch name was requested.
    #[error("unknown branch name `{0}`")]
    UnknownBranch(String),
    /// A regression underneath failed.
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Which physical knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// External flux, axis values in rad.
    Flux,
    /// Applied magnetic field, axis values in mT.
    Field,
}

/// Field direction and strength-to-splitting conversion for field sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec {
    /// Effective g-factor.
    pub g_factor: f64,
    /// Field angle relative to the internal spin axis (rad).
    pub theta: f64,
}

/// Names of the canonical transitions among the two lowest transmon
/// levels and the two spin states.
pub const CANONICAL_BRANCHES: [&str; 6] =
    ["transmon_down", "transmon_up", "spin_flip", "spin_flip_excited", "double_excitation", "swap"];

/// One canonical transition evaluated at a sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTransition {
    /// One of [`CANONICAL_BRANCHES`].
    pub name: &'static str,
    /// Label of the initial state.
    pub from: (usize, Spin),
    /// Label of the final state.
    pub to: (usize, Spin),
    /// `E_to - E_from` in GHz, signed.
    pub frequency: f64,
    /// Smaller of the two endpoint label confidences.
    pub confidence: f64,
}

/// Labelled low-energy spectrum at one sweep point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    /// Value of the swept axis (rad or mT).
    pub axis_value: f64,
    /// External flux at this point (rad).
    pub phi_ext: f64,
    /// Zeeman splitting at this point (GHz).
    pub zeeman_ghz: f64,
    /// Lowest eigenvalues in ascending order (GHz).
    pub energies: Vec<f64>,
    /// Product-state labels matching `energies`.
    pub labels: Vec<StateLabel>,
    /// False when the overlap-tracked branch identities from the previous
    /// point disagree with this point's own labels.
    pub tracking_consistent: bool,
}

impl SweepPoint {
    /// Index of the lowest state labelled `(transmon_index, spin)`.
    pub fn find(&self, transmon_index: usize, spin: Spin) -> Option<usize> {
        self.labels.iter().position(|l| l.transmon_index == transmon_index && l.spin == spin)
    }

    /// Smallest label confidence among the retained states.
    pub fn min_confidence(&self) -> f64 {
        self.labels.iter().map(|l| l.confidence).fold(f64::INFINITY, f64::min)
    }

    /// Frequency of one canonical branch, if both endpoints are labelled.
    pub fn branch(&self, name: &str) -> Option<NamedTransition> {
        let (from, to) = canonical_endpoints(name)?;
        let i = self.find(from.0, from.1)?;
        let j = self.find(to.0, to.1)?;
        Some(NamedTransition {
            name: CANONICAL_BRANCHES.iter().find(|&&n| n == name)?,
            from,
            to,
            frequency: self.energies[j] - self.energies[i],
            confidence: self.labels[i].confidence.min(self.labels[j].confidence),
        })
    }

    /// All canonical branches resolvable at this point.
    pub fn canonical_transitions(&self) -> Vec<NamedTransition> {
        CANONICAL_BRANCHES.iter().filter_map(|name| self.branch(name)).collect()
    }
}

/// Endpoint labels of a canonical branch name.
fn canonical_endpoints(name: &str) -> Option<((usize, Spin), (usize, Spin))> {
    Some(match name {
        "transmon_down" => ((0, Spin::Down), (1, Spin::Down)),
        "transmon_up" => ((0, Spin::Up), (1, Spin::Up)),
        "spin_flip" => ((0, Spin::Down), (0, Spin::Up)),
        "spin_flip_excited" => ((1, Spin::Down), (1, Spin::Up)),
        "double_excitation" => ((0, Spin::Down), (1, Spin::Up)),
        "swap" => ((0, Spin::Up), (1, Spin::Down)),
        _ => return None,
    })
}

/// A completed sweep.
#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Swept axis.
    pub axis: SweepAxis,
    /// Points in grid order.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Frequencies of one canonical branch along the sweep.
    pub fn branch_frequencies(&self, name: &str) -> Result<Vec<f64>, SweepError> {
        if !CANONICAL_BRANCHES.contains(&name) {
            return Err(SweepError::UnknownBranch(name.to_string()));
        }
        self.points
            .iter()
            .enumerate()
            .map(|(index, p)| {
                p.branch(name)
                    .map(|t| t.frequency)
                    .ok_or_else(|| SweepError::MissingBranch { name: name.to_string(), index })
            })
            .collect()
    }
}

/// Uniform grid of `points` values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n).map(|i| start + step * i as f64).collect()
        }
    }
}

/// Sweeps the external flux at fixed Zeeman field.
///
/// The Zeeman field is taken from `params`; each grid value replaces
/// `phi_ext`. `levels` states are retained per point.
pub fn sweep_flux(
    params: &CircuitParams,
    basis: &BasisSpec,
    grid: &[f64],
    levels: usize,
) -> Result<SweepResult, SweepError> {
    let configs: Vec<CircuitParams> = grid.iter().map(|&phi| params.with_phi_ext(phi)).collect();
    run_sweep(SweepAxis::Flux, grid, configs, basis, levels)
}

/// Sweeps the applied field magnitude (mT) at fixed flux.
///
/// Each grid value is converted to a Zeeman splitting through the field
/// spec; flux is taken from `params`.
pub fn sweep_field(
    params: &CircuitParams,
    basis: &BasisSpec,
    field: &FieldSpec,
    grid_mt: &[f64],
    levels: usize,
) -> Result<SweepResult, SweepError> {
    let configs: Vec<CircuitParams> = grid_mt
        .iter()
        .map(|&b| params.with_zeeman(zeeman_from_field(b, field.g_factor, field.theta)))
        .collect();
    run_sweep(SweepAxis::Field, grid_mt, configs, basis, levels)
}

fn run_sweep(
    axis: SweepAxis,
    grid: &[f64],
    configs: Vec<CircuitParams>,
    basis: &BasisSpec,
    levels: usize,
) -> Result<SweepResult, SweepError> {
    if grid.is_empty() {
        return Err(SweepError::GridTooSmall { min: 1, got: 0 });
    }
    let solutions = configs
        .par_iter()
        .map(|p| solve_circuit(p, basis, levels))
        .collect::<Result<Vec<_>, _>>()?;

    let mut points = Vec::with_capacity(grid.len());
    for (i, (sol, cfg)) in solutions.iter().zip(&configs).enumerate() {
        let tracking_consistent =
            if i == 0 { true } else { carried_labels_match(&solutions[i - 1], sol) };
        points.push(SweepPoint {
            axis_value: grid[i],
            phi_ext: cfg.reduced_phi_ext(),
            zeeman_ghz: cfg.zeeman.magnitude,
            energies: sol.energies.clone(),
            labels: sol.labels.clone(),
            tracking_consistent,
        });
    }
    Ok(SweepResult { axis, points })
}

/// Follows each branch of `prev` into `next` by maximal eigenvector
/// overlap and checks that the carried labels match `next`'s own labels.
fn carried_labels_match(
    prev: &crate::spectrum::EigenSolution,
    next: &crate::spectrum::EigenSolution,
) -> bool {
    let overlap: DMatrix<Complex64> = prev.states.adjoint() * &next.states;
    let k = prev.len().min(next.len());
    let mut taken = vec![false; next.len()];
    for row in 0..k {
        let mut best = None;
        let mut best_val = -1.0;
        for col in 0..next.len() {
            if taken[col] {
                continue;
            }
            let v = overlap[(row, col)].norm_sqr();
            if v > best_val {
                best_val = v;
                best = Some(col);
            }
        }
        let Some(col) = best else { return false };
        taken[col] = true;
        let a = prev.labels[row];
        let b = next.labels[col];
        if (a.transmon_index, a.spin) != (b.transmon_index, b.spin) {
            return false;
        }
    }
    true
}

/// Location and size of an avoided crossing between two branches.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingReport {
    /// Swept axis of the underlying sweep.
    pub axis: SweepAxis,
    /// Refined axis value of the minimum approach.
    pub axis_value: f64,
    /// Refined minimum frequency distance (GHz); equals twice the
    /// coupling matrix element for a two-level crossing.
    pub splitting: f64,
    /// Grid index of the discrete minimum.
    pub grid_index: usize,
    /// First branch name.
    pub branch_a: String,
    /// Second branch name.
    pub branch_b: String,
    /// True when the quadratic refinement was applicable.
    pub refined: bool,
}

/// Finds the minimum approach of two canonical branches along a sweep.
///
/// The squared frequency distance is interpolated by a parabola through
/// the discrete minimum and its neighbours; for a hyperbolic two-level
/// crossing this refinement is exact. A minimum on the window edge is
/// reported as [`SweepError::NoCrossing`].
pub fn find_avoided_crossing(
    sweep: &SweepResult,
    branch_a: &str,
    branch_b: &str,
) -> Result<CrossingReport, SweepError> {
    let n = sweep.points.len();
    if n < 3 {
        return Err(SweepError::GridTooSmall { min: 3, got: n });
    }
    let fa = sweep.branch_frequencies(branch_a)?;
    let fb = sweep.branch_frequencies(branch_b)?;
    let gap2: Vec<f64> = fa
        .iter()
        .zip(&fb)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .collect();

    let mut i_min = 0;
    for (i, &g) in gap2.iter().enumerate() {
        if g < gap2[i_min] {
            i_min = i;
        }
    }
    if i_min == 0 || i_min == n - 1 {
        return Err(SweepError::NoCrossing { a: branch_a.to_string(), b: branch_b.to_string() });
    }

    let xs = [
        sweep.points[i_min - 1].axis_value,
        sweep.points[i_min].axis_value,
        sweep.points[i_min + 1].axis_value,
    ];
    let ys = [gap2[i_min - 1], gap2[i_min], gap2[i_min + 1]];
    let refined = parabola_vertex(xs, ys);
    let (axis_value, min_gap2, was_refined) = match refined {
        Some((x, y)) if x >= xs[0] && x <= xs[2] => (x, y.max(0.0), true),
        _ => (xs[1], ys[1], false),
    };

    Ok(CrossingReport {
        axis: sweep.axis,
        axis_value,
        splitting: min_gap2.sqrt(),
        grid_index: i_min,
        branch_a: branch_a.to_string(),
        branch_b: branch_b.to_string(),
        refined: was_refined,
    })
}

/// Vertex of the parabola through three points, if it opens upwards.
fn parabola_vertex(xs: [f64; 3], ys: [f64; 3]) -> Option<(f64, f64)> {
    let c1 = (ys[1] - ys[0]) / (xs[1] - xs[0]);
    let c2 = (((ys[2] - ys[1]) / (xs[2] - xs[1])) - c1) / (xs[2] - xs[0]);
    if !c1.is_finite() || !c2.is_finite() || c2 <= 0.0 {
        return None;
    }
    let x = 0.5 * (xs[0] + xs[1]) - c1 / (2.0 * c2);
    let y = ys[0] + c1 * (x - xs[0]) + c2 * (x - xs[0]) * (x - xs[1]);
    Some((x, y))
}

/// Result of a linear Zeeman-versus-field regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GFactorFit {
    /// Effective g-factor, `slope x h / mu_B`.
    pub g_factor: f64,
    /// One-sigma uncertainty of the g-factor.
    pub g_sigma: f64,
    /// Fitted slope in GHz per mT.
    pub slope: f64,
    /// One-sigma uncertainty of the slope.
    pub slope_sigma: f64,
    /// Fitted zero-field intercept in GHz.
    pub intercept: f64,
    /// One-sigma uncertainty of the intercept.
    pub intercept_sigma: f64,
}

/// Extracts a g-factor from spin-flip frequencies versus field.
///
/// Fits `f = slope B + intercept` by (optionally weighted) linear least
/// squares and converts the slope with the Bohr magneton.
pub fn fit_gfactor(
    b_mt: &[f64],
    f_ghz: &[f64],
    sigmas: Option<&[f64]>,
) -> Result<GFactorFit, SweepError> {
    let line = weighted_linear_fit(b_mt, f_ghz, sigmas)?;
    Ok(GFactorFit {
        g_factor: line.slope / MU_B_GHZ_PER_MT,
        g_sigma: line.slope_sigma / MU_B_GHZ_PER_MT,
        slope: line.slope,
        slope_sigma: line.slope_sigma,
        intercept: line.intercept,
        intercept_sigma: line.intercept_sigma,
    })
}
