//! Subcommand implementations.
//!
//! Each command returns a [`Report`]: output files as name/content
//! pairs, text for stdout, the input paths it consumed and any
//! degeneracy flags. The driver writes the files plus a manifest and
//! maps non-empty flags to exit code 2.

use std::fmt::Write as _;
use std::path::PathBuf;

use asqlab_core::constants::MU_B_GHZ_PER_MT;
use asqlab_core::coupling::CouplingError;
use asqlab_core::fit::ops::{
    boltzmann_temperature, cp_scaling_exponent, rabi_noise_extract, susceptibility_bound,
};
use asqlab_core::{
    coupling_strengths, double_gaussian_fit, dwell_times, find_avoided_crossing, fit, histogram,
    linspace, simulate_telegraph, solve_circuit, sweep_field, sweep_flux, FieldSpec, FitError,
    FitModel, Model, ModelError, SpectrumError, SweepAxis, SweepError, SweepResult, TelegraphError,
    TelegraphSpec,
};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig, SweepSection};
use crate::table::{self, sig12, TableError};

/// Any failure a subcommand can produce; all exit with status 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Telegraph(#[from] TelegraphError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error("unknown fit model `{0}`; valid: rabi, t1, ramsey, echo, cp, cp_scaling, rabi_noise, boltzmann, line")]
    UnknownModel(String),
    #[error("initial guess has {got} values but model `{model}` has {want} parameters")]
    BadInit { model: String, want: usize, got: usize },
    #[error("no fit model given: pass `fit <model>` or set `model` in `[fit]`")]
    NoModel,
    #[error("no input path given: pass `--input` or set `input` in `[fit]`")]
    NoInput,
    #[error("no threshold given: pass `--threshold` or provide `[telegraph]` levels")]
    NoThreshold,
    #[error("{path}: {source}")]
    WriteIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Everything one run produces, before anything touches the filesystem.
#[derive(Debug, Default)]
pub struct Report {
    /// Output files as (name, content); written into the `--out` directory.
    pub files: Vec<(String, String)>,
    /// Human-readable summary printed to stdout.
    pub stdout: String,
    /// Subcommand arguments echoed into the manifest.
    pub args: Vec<(&'static str, String)>,
    /// Input file paths, echoed into the manifest.
    pub inputs: Vec<String>,
    /// Degeneracy flags; non-empty means exit code 2.
    pub flags: Vec<&'static str>,
}

fn need<T>(value: Option<T>, section: &'static str, key: &'static str) -> Result<T, CliError> {
    value.ok_or(ConfigError::MissingKey { section, key }.into())
}

fn check_axis(section: &SweepSection, wanted: &'static str) -> Result<(), CliError> {
    match &section.axis {
        Some(axis) if axis != wanted => {
            Err(ConfigError::AxisMismatch { got: axis.clone(), wanted }.into())
        }
        _ => Ok(()),
    }
}

fn sweep_section<'a>(
    cfg: &'a RunConfig,
    wanted: &'static str,
) -> Result<&'a SweepSection, CliError> {
    let section = cfg.sweep.as_ref().ok_or(ConfigError::MissingSection("sweep"))?;
    check_axis(section, wanted)?;
    Ok(section)
}

fn sweep_grid(section: &SweepSection) -> Result<Vec<f64>, CliError> {
    let start = need(section.start, "sweep", "start")?;
    let stop = need(section.stop, "sweep", "stop")?;
    let points = need(section.points, "sweep", "points")?;
    Ok(linspace(start, stop, points))
}

/// Serializes a sweep as `phi_ext,b_mT,label,frequency_GHz,confidence`
/// rows, one per canonical branch per grid point.
///
/// On flux sweeps the field is fixed; its mT value is only known when
/// `[sweep]` provides a `g_factor`, and is NaN otherwise.
fn sweep_csv(sweep: &SweepResult, fixed_b_mt: Option<f64>) -> String {
    let mut out = String::from("phi_ext,b_mT,label,frequency_GHz,confidence\n");
    for point in &sweep.points {
        let b_mt = match sweep.axis {
            SweepAxis::Field => point.axis_value,
            SweepAxis::Flux => fixed_b_mt.unwrap_or(f64::NAN),
        };
        for t in point.canonical_transitions() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                sig12(point.phi_ext),
                sig12(b_mt),
                t.name,
                sig12(t.frequency),
                sig12(t.confidence)
            );
        }
    }
    out
}

fn run_flux_sweep(cfg: &RunConfig) -> Result<(SweepResult, Option<f64>), CliError> {
    let section = sweep_section(cfg, "flux")?;
    let grid = sweep_grid(section)?;
    let sweep = sweep_flux(&cfg.circuit, &cfg.basis, &grid, cfg.levels)?;
    let fixed_b_mt =
        section.g_factor.map(|g| cfg.circuit.zeeman.magnitude / (g.abs() * MU_B_GHZ_PER_MT));
    Ok((sweep, fixed_b_mt))
}

/// One diagonalization at the configured bias point.
pub fn spectrum(cfg: &RunConfig) -> Result<Report, CliError> {
    let solution = solve_circuit(&cfg.circuit, &cfg.basis, cfg.levels)?;
    let mut csv = String::from("index,energy_GHz,transmon_index,spin,confidence\n");
    for (i, (energy, label)) in solution.energies.iter().zip(&solution.labels).enumerate() {
        let _ = writeln!(
            csv,
            "{i},{},{},{},{}",
            sig12(*energy),
            label.transmon_index,
            label.spin.name(),
            sig12(label.confidence)
        );
    }
    Ok(Report {
        files: vec![("spectrum.csv".to_string(), csv)],
        stdout: format!(
            "{} levels at phi_ext = {}; wrote spectrum.csv\n",
            solution.len(),
            sig12(cfg.circuit.phi_ext)
        ),
        ..Report::default()
    })
}

/// Flux sweep at fixed field.
pub fn sweep_flux_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let (sweep, fixed_b_mt) = run_flux_sweep(cfg)?;
    let csv = sweep_csv(&sweep, fixed_b_mt);
    Ok(Report {
        stdout: format!("swept flux over {} points; wrote sweep.csv\n", sweep.points.len()),
        files: vec![("sweep.csv".to_string(), csv)],
        ..Report::default()
    })
}

/// Field sweep at fixed flux.
pub fn sweep_field_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let section = sweep_section(cfg, "field")?;
    let grid = sweep_grid(section)?;
    let field = FieldSpec {
        g_factor: need(section.g_factor, "sweep", "g_factor")?,
        theta: need(section.theta, "sweep", "theta")?,
    };
    let sweep = sweep_field(&cfg.circuit, &cfg.basis, &field, &grid, cfg.levels)?;
    let csv = sweep_csv(&sweep, None);
    Ok(Report {
        stdout: format!("swept field over {} points; wrote sweep.csv\n", sweep.points.len()),
        files: vec![("sweep.csv".to_string(), csv)],
        ..Report::default()
    })
}

/// Closed-form coupling estimate at the bias point.
pub fn coupling(cfg: &RunConfig) -> Result<Report, CliError> {
    let estimate = coupling_strengths(&cfg.circuit)?;
    let mut text = String::new();
    for (key, value) in [
        ("ej_eff_GHz", estimate.ej_eff),
        ("phi_zpf", estimate.phi_zpf),
        ("j_transverse_GHz", estimate.j_transverse),
        ("j_longitudinal_GHz", estimate.j_longitudinal),
        ("static_spin_shift_GHz", estimate.static_spin_shift),
    ] {
        let _ = writeln!(text, "{key} = {}", sig12(value));
    }
    Ok(Report {
        stdout: text.clone(),
        files: vec![("coupling.txt".to_string(), text)],
        ..Report::default()
    })
}

/// Minimum splitting between two canonical branches on a flux sweep.
pub fn crossing(cfg: &RunConfig, branch_a: &str, branch_b: &str) -> Result<Report, CliError> {
    let (sweep, _) = run_flux_sweep(cfg)?;
    let report = find_avoided_crossing(&sweep, branch_a, branch_b)?;
    let mut text = String::new();
    let _ = writeln!(text, "branch_a = {}", report.branch_a);
    let _ = writeln!(text, "branch_b = {}", report.branch_b);
    let _ = writeln!(text, "axis = flux");
    let _ = writeln!(text, "axis_value = {}", sig12(report.axis_value));
    let _ = writeln!(text, "splitting_GHz = {}", sig12(report.splitting));
    let _ = writeln!(text, "grid_index = {}", report.grid_index);
    let _ = writeln!(text, "refined = {}", report.refined);
    Ok(Report {
        stdout: text.clone(),
        files: vec![("crossing.txt".to_string(), text)],
        args: vec![("branch_a", branch_a.to_string()), ("branch_b", branch_b.to_string())],
        ..Report::default()
    })
}

fn resolve_input(cfg: &RunConfig, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
    flag.or_else(|| cfg.fit.as_ref().and_then(|f| f.input.clone())).ok_or(CliError::NoInput)
}

/// Least-squares fit of one catalogue model to `x,y[,sigma]` data.
pub fn fit_cmd(
    cfg: &RunConfig,
    model_arg: Option<String>,
    input_flag: Option<PathBuf>,
) -> Result<Report, CliError> {
    let name = model_arg
        .or_else(|| cfg.fit.as_ref().and_then(|f| f.model.clone()))
        .ok_or(CliError::NoModel)?;
    let model = Model::from_name(&name).ok_or_else(|| CliError::UnknownModel(name.clone()))?;
    let input = resolve_input(cfg, input_flag)?;
    let (xs, ys, sigmas) = table::read_xy(&input)?;
    let init = cfg.fit.as_ref().and_then(|f| f.init.clone());
    if let Some(init) = &init {
        let want = model.param_names().len();
        if init.len() != want {
            return Err(CliError::BadInit {
                model: model.name().to_string(),
                want,
                got: init.len(),
            });
        }
    }
    let outcome = fit(&model, &xs, &ys, sigmas.as_deref(), init.as_deref())?;

    let mut text = String::new();
    let _ = writeln!(text, "model = {}", outcome.model);
    let _ = writeln!(text, "converged = {}", outcome.converged);
    let _ = writeln!(text, "degenerate = {}", outcome.degenerate);
    let _ = writeln!(text, "iterations = {}", outcome.iterations);
    let _ = writeln!(text, "cost = {}", sig12(outcome.cost));
    let mut csv = String::from("parameter,value,sigma\n");
    for ((param, value), sigma) in
        outcome.param_names.iter().zip(&outcome.params).zip(&outcome.uncertainties)
    {
        let _ = writeln!(text, "{param} = {}", sig12(*value));
        let _ = writeln!(text, "{param}_sigma = {}", sig12(*sigma));
        let _ = writeln!(csv, "{param},{},{}", sig12(*value), sig12(*sigma));
    }

    let mut flags = Vec::new();
    if outcome.degenerate {
        flags.push("degenerate");
    }
    if !outcome.converged {
        flags.push("not_converged");
    }
    Ok(Report {
        stdout: text.clone(),
        files: vec![
            (format!("fit_{}.txt", outcome.model), text),
            (format!("fit_{}.csv", outcome.model), csv),
        ],
        args: vec![("model", outcome.model.to_string())],
        inputs: vec![input.display().to_string()],
        flags,
    })
}

/// Coherence-versus-pulse-number power law and noise exponent.
pub fn cp_scaling(cfg: &RunConfig, input_flag: Option<PathBuf>) -> Result<Report, CliError> {
    let input = resolve_input(cfg, input_flag)?;
    let (xs, ys, _) = table::read_xy(&input)?;
    let fit = cp_scaling_exponent(&xs, &ys)?;
    let mut text = String::new();
    for (key, value) in [
        ("amplitude", fit.amplitude),
        ("gamma", fit.gamma),
        ("gamma_sigma", fit.gamma_sigma),
        ("beta", fit.beta),
        ("beta_sigma", fit.beta_sigma),
    ] {
        let _ = writeln!(text, "{key} = {}", sig12(value));
    }
    let _ = writeln!(text, "diverging = {}", fit.diverging);
    Ok(Report {
        stdout: text.clone(),
        files: vec![("cp_scaling.txt".to_string(), text)],
        inputs: vec![input.display().to_string()],
        flags: if fit.diverging { vec!["diverging"] } else { Vec::new() },
        ..Report::default()
    })
}

/// Two-channel decomposition of driven decay versus drive rate.
pub fn rabi_noise(cfg: &RunConfig, input_flag: Option<PathBuf>) -> Result<Report, CliError> {
    let input = resolve_input(cfg, input_flag)?;
    let (xs, ys, _) = table::read_xy(&input)?;
    let fit = rabi_noise_extract(&xs, &ys)?;
    let mut text = String::new();
    let _ = writeln!(text, "sigma_f = {}", sig12(fit.sigma_f));
    let _ = writeln!(text, "c_drive = {}", sig12(fit.c_drive));
    let _ = writeln!(text, "clamped = {}", fit.clamped);
    Ok(Report {
        stdout: text.clone(),
        files: vec![("rabi_noise.txt".to_string(), text)],
        inputs: vec![input.display().to_string()],
        flags: if fit.clamped { vec!["clamped"] } else { Vec::new() },
        ..Report::default()
    })
}

/// Effective temperature from population ratios versus frequency.
pub fn boltzmann(cfg: &RunConfig, input_flag: Option<PathBuf>) -> Result<Report, CliError> {
    let input = resolve_input(cfg, input_flag)?;
    let (xs, ys, _) = table::read_xy(&input)?;
    let estimate = boltzmann_temperature(&xs, &ys)?;
    let mut text = String::new();
    let _ = writeln!(text, "temperature_mK = {}", sig12(estimate.t_mk));
    let _ = writeln!(text, "temperature_sigma_mK = {}", sig12(estimate.t_sigma_mk));
    let _ = writeln!(text, "unphysical = {}", estimate.unphysical);
    let _ = writeln!(text, "points = {}", xs.len());
    Ok(Report {
        stdout: text.clone(),
        files: vec![("boltzmann.txt".to_string(), text)],
        inputs: vec![input.display().to_string()],
        flags: if estimate.unphysical { vec!["unphysical"] } else { Vec::new() },
        ..Report::default()
    })
}

/// Equivalent control fluctuation from a noise strength and a
/// susceptibility.
pub fn bound(sigma_f: f64, susceptibility: f64) -> Result<Report, CliError> {
    let value = susceptibility_bound(sigma_f, susceptibility)?;
    let mut text = String::new();
    let _ = writeln!(text, "sigma_f_GHz = {}", sig12(sigma_f));
    let _ = writeln!(text, "susceptibility_GHz_per_unit = {}", sig12(susceptibility));
    let _ = writeln!(text, "bound_units = {}", sig12(value));
    Ok(Report {
        stdout: text.clone(),
        files: vec![("bound.txt".to_string(), text)],
        args: vec![("sigma_f", sig12(sigma_f)), ("susceptibility", sig12(susceptibility))],
        ..Report::default()
    })
}

/// Simulates a two-state telegraph trace.
pub fn telegraph_sim(cfg: &RunConfig) -> Result<Report, CliError> {
    let section = cfg.telegraph.ok_or(ConfigError::MissingSection("telegraph"))?;
    let spec = TelegraphSpec {
        dwell_a_us: section.dwell_a_us,
        dwell_b_us: section.dwell_b_us,
        level_a: section.level_a,
        level_b: section.level_b,
        noise_sigma: section.noise_sigma,
        dt_us: section.dt_us,
        duration_s: section.duration_s,
        rng_seed: cfg.rng_seed,
    };
    let trace = simulate_telegraph(&spec)?;
    let mut csv = String::from("time_us,signal\n");
    for (i, sample) in trace.samples.iter().enumerate() {
        let _ = writeln!(csv, "{},{}", sig12(i as f64 * trace.dt_us), sig12(*sample));
    }
    Ok(Report {
        stdout: format!(
            "simulated {} samples at dt = {} us; wrote trace.csv\n",
            trace.len(),
            sig12(trace.dt_us)
        ),
        files: vec![("trace.csv".to_string(), csv)],
        ..Report::default()
    })
}

/// Dwell statistics and double-Gaussian peaks of a trace.
pub fn telegraph_analyze(
    cfg: &RunConfig,
    input: PathBuf,
    threshold_flag: Option<f64>,
    bins: usize,
) -> Result<Report, CliError> {
    let trace = table::read_trace(&input)?;
    let threshold = threshold_flag
        .or_else(|| cfg.telegraph.map(|t| 0.5 * (t.level_a + t.level_b)))
        .ok_or(CliError::NoThreshold)?;
    let dwells = dwell_times(&trace, threshold)?;
    let hist = histogram(&trace.samples, bins)?;
    let peaks = double_gaussian_fit(&hist)?;

    let mut dwell_text = String::new();
    let _ = writeln!(dwell_text, "threshold = {}", sig12(dwells.threshold));
    let _ = writeln!(dwell_text, "transitions = {}", dwells.transitions);
    let _ = writeln!(dwell_text, "low_confidence = {}", dwells.low_confidence);
    for (side, stats) in [("low", &dwells.low), ("high", &dwells.high)] {
        let _ = writeln!(dwell_text, "{side}_mean_us = {}", sig12(stats.mean_us));
        let _ = writeln!(dwell_text, "{side}_raw_mean_us = {}", sig12(stats.raw_mean_us));
        let _ = writeln!(dwell_text, "{side}_sigma_us = {}", sig12(stats.sigma_us));
        let _ = writeln!(dwell_text, "{side}_count = {}", stats.count);
        let _ = writeln!(dwell_text, "{side}_population = {}", sig12(stats.population));
    }

    let mut peak_text = String::new();
    for (key, value) in [
        ("mean_low", peaks.mean_low),
        ("sigma_low", peaks.sigma_low),
        ("amplitude_low", peaks.amplitude_low),
        ("mean_high", peaks.mean_high),
        ("sigma_high", peaks.sigma_high),
        ("amplitude_high", peaks.amplitude_high),
        ("population_low", peaks.population_low),
        ("population_high", peaks.population_high),
    ] {
        let _ = writeln!(peak_text, "{key} = {}", sig12(value));
    }
    let _ = writeln!(peak_text, "merged = {}", peaks.merged);
    let _ = writeln!(peak_text, "converged = {}", peaks.outcome.converged);
    let _ = writeln!(peak_text, "degenerate = {}", peaks.outcome.degenerate);

    let mut hist_csv = String::from("bin_center,count\n");
    for (center, count) in &hist {
        let _ = writeln!(hist_csv, "{},{}", sig12(*center), sig12(*count));
    }

    let mut flags = Vec::new();
    if dwells.low_confidence {
        flags.push("low_confidence");
    }
    if peaks.merged {
        flags.push("merged");
    }
    if peaks.outcome.degenerate {
        flags.push("degenerate");
    }
    if !peaks.outcome.converged {
        flags.push("not_converged");
    }
    Ok(Report {
        stdout: format!("{dwell_text}{peak_text}"),
        files: vec![
            ("dwells.txt".to_string(), dwell_text),
            ("peaks.txt".to_string(), peak_text),
            ("histogram.csv".to_string(), hist_csv),
        ],
        args: vec![("threshold", sig12(threshold)), ("bins", bins.to_string())],
        inputs: vec![input.display().to_string()],
        flags,
    })
}

/// Assignment fidelity of two labelled shot sets.
pub fn fidelity(ground: PathBuf, excited: PathBuf) -> Result<Report, CliError> {
    let ground_shots = table::read_shots(&ground)?;
    let excited_shots = table::read_shots(&excited)?;
    let report = asqlab_core::assignment_fidelity(&ground_shots, &excited_shots)?;
    let mut text = String::new();
    for (key, value) in [
        ("fidelity", report.fidelity),
        ("threshold", report.threshold),
        ("p_ground_given_excited", report.p_ground_given_excited),
        ("p_excited_given_ground", report.p_excited_given_ground),
        ("axis_i", report.axis.0),
        ("axis_q", report.axis.1),
    ] {
        let _ = writeln!(text, "{key} = {}", sig12(value));
    }
    let _ = writeln!(text, "degenerate = {}", report.degenerate);
    Ok(Report {
        stdout: text.clone(),
        files: vec![("fidelity.txt".to_string(), text)],
        inputs: vec![ground.display().to_string(), excited.display().to_string()],
        flags: if report.degenerate { vec!["degenerate"] } else { Vec::new() },
        ..Report::default()
    })
}
