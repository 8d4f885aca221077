//! Structured-text run configuration.
//!
//! The format is deliberately small: `[section]` headers, `key = value`
//! lines, `#` or `;` comments. The known sections are `[circuit]`,
//! `[solver]`, `[sweep]`, `[fit]` and `[telegraph]`, plus a top-level
//! `rng_seed`. Unknown sections and keys are rejected with their origin
//! (file line or `--set` override) so a typo cannot silently fall back
//! to a default.
//!
//! Units: energies and frequencies in GHz, angles in radians, fields in
//! mT, dwell and sampling times in us, trace durations in s.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;
use std::path::PathBuf;

use asqlab_core::{BasisSpec, CircuitParams, Gauge};
use thiserror::Error;

use crate::table::sig12;

/// Where a configuration entry came from, for error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// 1-based line of the config file.
    File(usize),
    /// A `--set KEY=VALUE` command-line override.
    Override,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File(line) => write!(f, "config line {line}"),
            Origin::Override => f.write_str("--set override"),
        }
    }
}

/// Errors raised while parsing or resolving a run configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: expected `[section]` or `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("config line {line}: unknown section `[{name}]`")]
    UnknownSection { name: String, line: usize },
    #[error("{origin}: unknown key `{key}` {place}")]
    UnknownKey { key: String, place: String, origin: Origin },
    #[error("{origin}: `{key} = {value}` is not a valid {expected}")]
    BadValue { key: String, value: String, expected: &'static str, origin: Origin },
    #[error("this command needs a `[{0}]` config section")]
    MissingSection(&'static str),
    #[error("missing key `{key}` in `[{section}]`")]
    MissingKey { section: &'static str, key: &'static str },
    #[error("`--set` expects `section.key=value` or `rng_seed=value`, got `{0}`")]
    BadOverride(String),
    #[error("[sweep] axis is `{got}` but this subcommand sweeps {wanted}")]
    AxisMismatch { got: String, wanted: &'static str },
}

const SECTIONS: [&str; 5] = ["circuit", "solver", "sweep", "fit", "telegraph"];

#[derive(Debug, Clone)]
struct RawEntry {
    value: String,
    origin: Origin,
}

/// Parsed but untyped configuration; later entries shadow earlier ones.
#[derive(Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<(Option<String>, String), RawEntry>,
    seen_sections: BTreeSet<String>,
}

impl RawConfig {
    /// Parses the structured text format.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RawConfig::default();
        let mut section: Option<String> = None;
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw_line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
                continue;
            }
            if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(ConfigError::UnknownSection { name: name.to_string(), line });
                }
                cfg.seen_sections.insert(name.to_string());
                section = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(ConfigError::Malformed { line, text: trimmed.to_string() });
            };
            cfg.entries.insert(
                (section.clone(), key.trim().to_string()),
                RawEntry { value: value.trim().to_string(), origin: Origin::File(line) },
            );
        }
        Ok(cfg)
    }

    /// Applies one `--set section.key=value` (or `rng_seed=value`) override.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (path, value) =
            spec.split_once('=').ok_or_else(|| ConfigError::BadOverride(spec.to_string()))?;
        let (section, key) = match path.trim().split_once('.') {
            Some((s, k)) => {
                let s = s.trim();
                if !SECTIONS.contains(&s) {
                    return Err(ConfigError::BadOverride(spec.to_string()));
                }
                self.seen_sections.insert(s.to_string());
                (Some(s.to_string()), k.trim().to_string())
            }
            None => (None, path.trim().to_string()),
        };
        if key.is_empty() {
            return Err(ConfigError::BadOverride(spec.to_string()));
        }
        self.entries.insert(
            (section, key),
            RawEntry { value: value.trim().to_string(), origin: Origin::Override },
        );
        Ok(())
    }

    fn section_used(&self, name: &str) -> bool {
        self.seen_sections.contains(name)
            || self.entries.keys().any(|(s, _)| s.as_deref() == Some(name))
    }

    fn take(&mut self, section: Option<&str>, key: &str) -> Option<(String, Origin)> {
        self.entries
            .remove(&(section.map(str::to_string), key.to_string()))
            .map(|e| (e.value, e.origin))
    }

    fn take_parsed<T: std::str::FromStr>(
        &mut self,
        section: Option<&str>,
        key: &str,
        expected: &'static str,
    ) -> Result<Option<T>, ConfigError> {
        match self.take(section, key) {
            None => Ok(None),
            Some((value, origin)) => value.parse::<T>().map(Some).map_err(|_| {
                ConfigError::BadValue { key: key.to_string(), value, expected, origin }
            }),
        }
    }

    fn take_f64(&mut self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        self.take_parsed(Some(section), key, "number")
    }

    fn take_usize(&mut self, section: &str, key: &str) -> Result<Option<usize>, ConfigError> {
        self.take_parsed(Some(section), key, "non-negative integer")
    }

    fn need_f64(&mut self, section: &'static str, key: &'static str) -> Result<f64, ConfigError> {
        self.take_f64(section, key)?.ok_or(ConfigError::MissingKey { section, key })
    }

    fn reject_leftovers(&self) -> Result<(), ConfigError> {
        if let Some(((section, key), entry)) = self.entries.iter().next() {
            let place = match section {
                Some(s) => format!("in `[{s}]`"),
                None => "at top level".to_string(),
            };
            return Err(ConfigError::UnknownKey { key: key.clone(), place, origin: entry.origin });
        }
        Ok(())
    }
}

/// `[sweep]` section: grid and field-conversion parameters.
///
/// `start` and `stop` are in radians for flux sweeps and in mT for field
/// sweeps; `g_factor` and `theta` (radians) convert field magnitudes to
/// Zeeman splittings.
#[derive(Debug, Clone, Default)]
pub struct SweepSection {
    pub axis: Option<String>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    pub g_factor: Option<f64>,
    pub theta: Option<f64>,
}

/// `[fit]` section: model id, input CSV path and optional starting guess.
#[derive(Debug, Clone, Default)]
pub struct FitSection {
    pub model: Option<String>,
    pub input: Option<PathBuf>,
    pub init: Option<Vec<f64>>,
}

/// `[telegraph]` section: simulation parameters except the seed, which
/// is the top-level `rng_seed`.
#[derive(Debug, Clone, Copy)]
pub struct TelegraphSection {
    pub dwell_a_us: f64,
    pub dwell_b_us: f64,
    pub level_a: f64,
    pub level_b: f64,
    pub noise_sigma: f64,
    pub dt_us: f64,
    pub duration_s: f64,
}

/// Fully resolved run configuration.
///
/// `[circuit]` defaults to the reference device and `[solver]` to the
/// default basis with six retained levels, so a missing config file
/// means "reference device, default solver". The optional sections are
/// `None` unless mentioned in the file or in an override.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub circuit: CircuitParams,
    pub basis: BasisSpec,
    pub levels: usize,
    pub sweep: Option<SweepSection>,
    pub fit: Option<FitSection>,
    pub telegraph: Option<TelegraphSection>,
    pub rng_seed: u64,
}

impl RunConfig {
    /// Resolves a raw configuration, rejecting unknown keys.
    pub fn resolve(mut raw: RawConfig) -> Result<Self, ConfigError> {
        let mut circuit = CircuitParams::reference_device();
        if let Some(v) = raw.take_f64("circuit", "e_c")? {
            circuit.e_c = v;
        }
        if let Some(v) = raw.take_f64("circuit", "e_j")? {
            circuit.e_j = v;
        }
        if let Some(v) = raw.take_f64("circuit", "e_0")? {
            circuit.e_0 = v;
        }
        if let Some(v) = raw.take_f64("circuit", "e_so")? {
            circuit.e_so = v;
        }
        if let Some(v) = raw.take_f64("circuit", "phi_ext")? {
            circuit.phi_ext = v;
        }
        if let Some(v) = raw.take_f64("circuit", "zeeman_magnitude")? {
            circuit.zeeman.magnitude = v;
        }
        if let Some(v) = raw.take_f64("circuit", "zeeman_theta")? {
            circuit.zeeman.theta = v;
        }

        let mut basis = BasisSpec::default();
        if let Some(v) = raw.take_usize("solver", "n_charge")? {
            basis.n_charge = v;
        }
        if let Some((value, origin)) = raw.take(Some("solver"), "gauge") {
            basis.gauge = match value.as_str() {
                "flux_on_dot" => Gauge::FluxOnDot,
                "flux_on_reference" => Gauge::FluxOnReference,
                _ => {
                    return Err(ConfigError::BadValue {
                        key: "gauge".to_string(),
                        value,
                        expected: "`flux_on_dot` or `flux_on_reference`",
                        origin,
                    })
                }
            };
        }
        let levels = raw.take_usize("solver", "k")?.unwrap_or(6);

        let sweep = if raw.section_used("sweep") {
            Some(SweepSection {
                axis: raw.take(Some("sweep"), "axis").map(|(v, _)| v),
                start: raw.take_f64("sweep", "start")?,
                stop: raw.take_f64("sweep", "stop")?,
                points: raw.take_usize("sweep", "points")?,
                g_factor: raw.take_f64("sweep", "g_factor")?,
                theta: raw.take_f64("sweep", "theta")?,
            })
        } else {
            None
        };

        let fit = if raw.section_used("fit") {
            let init = match raw.take(Some("fit"), "init") {
                None => None,
                Some((value, origin)) => {
                    let parsed: Result<Vec<f64>, _> =
                        value.split(',').map(|v| v.trim().parse::<f64>()).collect();
                    Some(parsed.map_err(|_| ConfigError::BadValue {
                        key: "init".to_string(),
                        value,
                        expected: "comma-separated number list",
                        origin,
                    })?)
                }
            };
            Some(FitSection {
                model: raw.take(Some("fit"), "model").map(|(v, _)| v),
                input: raw.take(Some("fit"), "input").map(|(v, _)| PathBuf::from(v)),
                init,
            })
        } else {
            None
        };

        let telegraph = if raw.section_used("telegraph") {
            Some(TelegraphSection {
                dwell_a_us: raw.need_f64("telegraph", "dwell_a_us")?,
                dwell_b_us: raw.need_f64("telegraph", "dwell_b_us")?,
                level_a: raw.need_f64("telegraph", "level_a")?,
                level_b: raw.need_f64("telegraph", "level_b")?,
                noise_sigma: raw.need_f64("telegraph", "noise_sigma")?,
                dt_us: raw.need_f64("telegraph", "dt_us")?,
                duration_s: raw.need_f64("telegraph", "duration_s")?,
            })
        } else {
            None
        };

        let rng_seed = raw.take_parsed::<u64>(None, "rng_seed", "unsigned integer")?.unwrap_or(0);

        raw.reject_leftovers()?;
        Ok(RunConfig { circuit, basis, levels, sweep, fit, telegraph, rng_seed })
    }

    /// Serializes the resolved configuration back into config syntax,
    /// for the run manifest.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "rng_seed = {}", self.rng_seed);
        let _ = writeln!(out, "[circuit]");
        let _ = writeln!(out, "e_c = {}", sig12(self.circuit.e_c));
        let _ = writeln!(out, "e_j = {}", sig12(self.circuit.e_j));
        let _ = writeln!(out, "e_0 = {}", sig12(self.circuit.e_0));
        let _ = writeln!(out, "e_so = {}", sig12(self.circuit.e_so));
        let _ = writeln!(out, "phi_ext = {}", sig12(self.circuit.phi_ext));
        let _ = writeln!(out, "zeeman_magnitude = {}", sig12(self.circuit.zeeman.magnitude));
        let _ = writeln!(out, "zeeman_theta = {}", sig12(self.circuit.zeeman.theta));
        let _ = writeln!(out, "[solver]");
        let _ = writeln!(out, "n_charge = {}", self.basis.n_charge);
        let gauge = match self.basis.gauge {
            Gauge::FluxOnDot => "flux_on_dot",
            Gauge::FluxOnReference => "flux_on_reference",
        };
        let _ = writeln!(out, "gauge = {gauge}");
        let _ = writeln!(out, "k = {}", self.levels);
        if let Some(s) = &self.sweep {
            let _ = writeln!(out, "[sweep]");
            if let Some(v) = &s.axis {
                let _ = writeln!(out, "axis = {v}");
            }
            for (key, v) in
                [("start", s.start), ("stop", s.stop), ("g_factor", s.g_factor), ("theta", s.theta)]
            {
                if let Some(v) = v {
                    let _ = writeln!(out, "{key} = {}", sig12(v));
                }
            }
            if let Some(v) = s.points {
                let _ = writeln!(out, "points = {v}");
            }
        }
        if let Some(f) = &self.fit {
            let _ = writeln!(out, "[fit]");
            if let Some(v) = &f.model {
                let _ = writeln!(out, "model = {v}");
            }
            if let Some(v) = &f.input {
                let _ = writeln!(out, "input = {}", v.display());
            }
            if let Some(init) = &f.init {
                let list: Vec<String> = init.iter().map(|&v| sig12(v)).collect();
                let _ = writeln!(out, "init = {}", list.join(", "));
            }
        }
        if let Some(t) = &self.telegraph {
            let _ = writeln!(out, "[telegraph]");
            for (key, v) in [
                ("dwell_a_us", t.dwell_a_us),
                ("dwell_b_us", t.dwell_b_us),
                ("level_a", t.level_a),
                ("level_b", t.level_b),
                ("noise_sigma", t.noise_sigma),
                ("dt_us", t.dt_us),
                ("duration_s", t.duration_s),
            ] {
                let _ = writeln!(out, "{key} = {}", sig12(v));
            }
        }
        out
    }
}
