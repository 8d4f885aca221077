//! Command-line laboratory driver.
//!
//! Wraps the core crate's spectra, sweeps, coupling estimates, curve
//! fits and telegraph statistics behind subcommands that read a
//! structured-text config, write CSV and key-value reports plus a run
//! manifest, and signal degenerate results through the exit code:
//! 0 success, 2 flagged-degenerate result, 1 error.
//!
//! Identical config and seed give byte-identical outputs, independent
//! of `--jobs`.

mod commands;
mod config;
mod table;

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, Report};
use config::{RawConfig, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "asqlab",
    version,
    about = "Spin-in-transmon circuit laboratory: spectra, sweeps, fits, telegraph statistics"
)]
struct Cli {
    /// Config file: `[section]` headers with `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one config entry, e.g. `--set circuit.e_so=0.309`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,

    /// Worker threads for sweeps; the default uses every core.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Random seed; overrides the config's `rng_seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One diagonalization: labelled levels as CSV.
    Spectrum,
    /// Flux sweep: canonical transitions as CSV.
    SweepFlux,
    /// Field sweep: canonical transitions as CSV.
    SweepField,
    /// Closed-form coupling estimate at the bias point.
    Coupling,
    /// Minimum splitting between two branches on a flux sweep.
    Crossing {
        /// First branch name.
        #[arg(long, default_value = "spin_flip")]
        branch_a: String,
        /// Second branch name.
        #[arg(long, default_value = "transmon_down")]
        branch_b: String,
    },
    /// Least-squares fit of one catalogue model to `x,y[,sigma]` CSV data.
    Fit {
        /// Model name; falls back to `[fit] model`.
        #[arg(value_name = "MODEL")]
        model: Option<String>,
        /// Input CSV; falls back to `[fit] input`.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Power-law fit of coherence time versus pulse number.
    CpScaling {
        /// Input CSV; falls back to `[fit] input`.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Two-channel decomposition of driven decay versus drive rate.
    RabiNoise {
        /// Input CSV; falls back to `[fit] input`.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Effective temperature from population ratios versus frequency.
    Boltzmann {
        /// Input CSV; falls back to `[fit] input`.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Equivalent control fluctuation of a noise strength.
    Bound {
        /// Frequency noise strength (GHz).
        #[arg(long)]
        sigma_f: f64,
        /// Transition susceptibility (GHz per control unit).
        #[arg(long)]
        susceptibility: f64,
    },
    /// Simulate a two-state telegraph trace.
    TelegraphSim,
    /// Dwell statistics and double-Gaussian peaks of a trace CSV.
    TelegraphAnalyze {
        /// Trace CSV with columns `time_us,signal`.
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        /// Classification threshold; defaults to the midpoint of the
        /// `[telegraph]` levels.
        #[arg(long)]
        threshold: Option<f64>,
        /// Histogram bin count.
        #[arg(long, default_value_t = 101)]
        bins: usize,
    },
    /// Assignment fidelity of two labelled shot CSVs.
    Fidelity {
        /// Ground-state shots, columns `i,q`.
        #[arg(long, value_name = "PATH")]
        ground: PathBuf,
        /// Excited-state shots, columns `i,q`.
        #[arg(long, value_name = "PATH")]
        excited: PathBuf,
    },
}

impl Command {
    fn label(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::SweepFlux => "sweep-flux",
            Command::SweepField => "sweep-field",
            Command::Coupling => "coupling",
            Command::Crossing { .. } => "crossing",
            Command::Fit { .. } => "fit",
            Command::CpScaling { .. } => "cp-scaling",
            Command::RabiNoise { .. } => "rabi-noise",
            Command::Boltzmann { .. } => "boltzmann",
            Command::Bound { .. } => "bound",
            Command::TelegraphSim => "telegraph-sim",
            Command::TelegraphAnalyze { .. } => "telegraph-analyze",
            Command::Fidelity { .. } => "fidelity",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let help = matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = err.print();
            return if help { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(cli) {
        Ok(flags) if flags.is_empty() => ExitCode::SUCCESS,
        Ok(flags) => {
            eprintln!("flagged: {}", flags.join(", "));
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<Vec<&'static str>, CliError> {
    let mut raw = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|source| CliError::WriteIo { path: path.display().to_string(), source })?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    for spec in &cli.sets {
        raw.apply_override(spec)?;
    }
    if let Some(seed) = cli.seed {
        raw.apply_override(&format!("rng_seed={seed}"))?;
    }
    let cfg = RunConfig::resolve(raw)?;

    let report = match cli.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Pool(e.to_string()))?
            .install(|| dispatch(&cli.command, &cfg)),
        None => dispatch(&cli.command, &cfg),
    }?;

    fs::create_dir_all(&cli.out)
        .map_err(|source| CliError::WriteIo { path: cli.out.display().to_string(), source })?;
    let write = |name: &str, content: &str| -> Result<(), CliError> {
        let path = cli.out.join(name);
        fs::write(&path, content)
            .map_err(|source| CliError::WriteIo { path: path.display().to_string(), source })
    };
    for (name, content) in &report.files {
        write(name, content)?;
    }
    write("manifest.txt", &manifest(cli.command.label(), &cfg, &report))?;

    print!("{}", report.stdout);
    Ok(report.flags)
}

fn dispatch(command: &Command, cfg: &RunConfig) -> Result<Report, CliError> {
    match command {
        Command::Spectrum => commands::spectrum(cfg),
        Command::SweepFlux => commands::sweep_flux_cmd(cfg),
        Command::SweepField => commands::sweep_field_cmd(cfg),
        Command::Coupling => commands::coupling(cfg),
        Command::Crossing { branch_a, branch_b } => commands::crossing(cfg, branch_a, branch_b),
        Command::Fit { model, input } => commands::fit_cmd(cfg, model.clone(), input.clone()),
        Command::CpScaling { input } => commands::cp_scaling(cfg, input.clone()),
        Command::RabiNoise { input } => commands::rabi_noise(cfg, input.clone()),
        Command::Boltzmann { input } => commands::boltzmann(cfg, input.clone()),
        Command::Bound { sigma_f, susceptibility } => commands::bound(*sigma_f, *susceptibility),
        Command::TelegraphSim => commands::telegraph_sim(cfg),
        Command::TelegraphAnalyze { input, threshold, bins } => {
            commands::telegraph_analyze(cfg, input.clone(), *threshold, *bins)
        }
        Command::Fidelity { ground, excited } => {
            commands::fidelity(ground.clone(), excited.clone())
        }
    }
}

/// Ties the outputs to their inputs: subcommand, arguments, files and
/// the fully resolved configuration. Deliberately free of timestamps
/// and paths chosen at run time (`--out`, `--jobs`), so identical
/// config and seed reproduce the manifest byte for byte.
fn manifest(label: &str, cfg: &RunConfig, report: &Report) -> String {
    let mut out = String::from("# run manifest\n");
    let _ = writeln!(out, "command = {label}");
    for (key, value) in &report.args {
        let _ = writeln!(out, "arg.{key} = {value}");
    }
    let inputs: Vec<&str> = report.inputs.iter().map(String::as_str).collect();
    let _ = writeln!(
        out,
        "inputs = {}",
        if inputs.is_empty() { "none".to_string() } else { inputs.join(", ") }
    );
    let mut outputs: Vec<&str> = report.files.iter().map(|(name, _)| name.as_str()).collect();
    outputs.push("manifest.txt");
    let _ = writeln!(out, "outputs = {}", outputs.join(", "));
    let _ = writeln!(
        out,
        "flags = {}",
        if report.flags.is_empty() { "none".to_string() } else { report.flags.join(", ") }
    );
    out.push('\n');
    out.push_str(&cfg.echo());
    out
}
