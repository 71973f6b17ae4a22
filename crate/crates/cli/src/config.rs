//! Flat TOML run configuration.
//!
//! Every key is optional; absent keys take the tuned defaults. Unknown keys
//! and out-of-range values are rejected with the offending key named.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use lowthrust_mga::evolve::{NmOptions, SgaConfig};
use lowthrust_mga::ltto::{LttoSettings, TOF_MAX_DAYS};
use lowthrust_mga::rtba::RtbaConfig;
use lowthrust_mga::shaping::MAX_FREE_COUNT;
use lowthrust_mga::{Planet, Sequence};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One sequence, island model plus Nelder-Mead polish.
    Ltto,
    /// One sequence, one archipelago per 60-day departure interval.
    Grid,
    /// Sequence search.
    Rtba,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Ltto => "ltto",
            Mode::Grid => "grid",
            Mode::Rtba => "rtba",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ltto" => Ok(Mode::Ltto),
            "grid" => Ok(Mode::Grid),
            "rtba" => Ok(Mode::Rtba),
            _ => Err(format!("unknown mode '{s}' (expected ltto, grid or rtba)")),
        }
    }
}

/// The document as written: one optional entry per key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub mode: Option<Mode>,
    pub sequence: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub elements_file: Option<PathBuf>,

    pub departure_body: Option<String>,
    pub arrival_body: Option<String>,
    pub max_gas: Option<usize>,
    pub q: Option<f64>,
    pub p: Option<usize>,
    pub cpu_count: Option<usize>,
    pub max_recursions: Option<usize>,
    pub xi: Option<f64>,
    pub chi: Option<f64>,
    pub window_start_mjd: Option<f64>,
    pub window_end_mjd: Option<f64>,
    pub topology_probability: Option<f64>,

    pub population_size: Option<usize>,
    pub generations: Option<usize>,
    pub crossover_rate: Option<f64>,
    pub mutation_rate: Option<f64>,
    pub mutation_sigma: Option<f64>,
    pub tournament_size: Option<usize>,
    pub elitism_count: Option<usize>,

    pub free_count: Option<usize>,
    pub tof_min_days: Option<f64>,
    pub tof_max_days: Option<f64>,
    pub window_days: Option<f64>,
    pub coeff_bound: Option<f64>,
    pub max_thrust_accel: Option<f64>,

    pub nm_tol: Option<f64>,
    pub nm_max_iter: Option<usize>,

    /// Accepted and recorded; the objective is ΔV only.
    pub spacecraft_mass_kg: Option<f64>,
    pub specific_impulse_s: Option<f64>,
}

impl ConfigFile {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub sequence: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub q: Option<f64>,
    pub xi: Option<f64>,
    pub chi: Option<f64>,
    pub elements_file: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, file: &mut ConfigFile) {
        macro_rules! over {
            ($($f:ident),*) => {$(
                if let Some(v) = &self.$f {
                    file.$f = Some(v.clone());
                }
            )*};
        }
        over!(mode, sequence, seed, output_dir, q, xi, chi, elements_file);
    }
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// Required by the single-sequence modes.
    pub sequence: Option<Sequence>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub elements_file: Option<PathBuf>,
    /// Search parameters; `rtba.sga` and `rtba.ltto` serve every mode.
    pub rtba: RtbaConfig,
    pub nm: NmOptions,
    pub spacecraft_mass_kg: Option<f64>,
    pub specific_impulse_s: Option<f64>,
}

impl RunConfig {
    pub fn sga(&self) -> &SgaConfig {
        &self.rtba.sga
    }

    /// The fully populated flat form; parsing it yields `self` again.
    pub fn to_file(&self) -> ConfigFile {
        let r = &self.rtba;
        let s = &r.sga;
        let l = &r.ltto;
        ConfigFile {
            mode: Some(self.mode),
            sequence: self.sequence.as_ref().map(ToString::to_string),
            output_dir: Some(self.output_dir.clone()),
            seed: Some(self.seed),
            elements_file: self.elements_file.clone(),
            departure_body: Some(r.departure_body.letter().to_string()),
            arrival_body: Some(r.arrival_body.letter().to_string()),
            max_gas: Some(r.max_gas),
            q: Some(r.q),
            p: Some(r.p),
            cpu_count: Some(r.cpu_count),
            max_recursions: Some(r.max_recursions),
            xi: Some(r.xi),
            chi: Some(r.chi),
            window_start_mjd: Some(r.departure_window.0),
            window_end_mjd: Some(r.departure_window.1),
            topology_probability: Some(r.topology_probability),
            population_size: Some(s.population_size),
            generations: Some(s.generations),
            crossover_rate: Some(s.crossover_rate),
            mutation_rate: s.mutation_rate,
            mutation_sigma: Some(s.mutation_sigma),
            tournament_size: Some(s.tournament_size),
            elitism_count: Some(s.elitism_count),
            free_count: Some(l.free_count),
            tof_min_days: Some(l.tof_min_days),
            tof_max_days: Some(l.tof_max_days),
            window_days: Some(l.window_days),
            coeff_bound: Some(l.coeff_bound),
            max_thrust_accel: l.max_thrust_accel,
            nm_tol: Some(self.nm.tol),
            nm_max_iter: Some(self.nm.max_iter),
            spacecraft_mass_kg: self.spacecraft_mass_kg,
            specific_impulse_s: self.specific_impulse_s,
        }
    }
}

fn field_err(key: &str, msg: impl fmt::Display) -> CliError {
    CliError::Config(format!("`{key}`: {msg}"))
}

fn check(ok: bool, key: &str, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(field_err(key, msg()))
    }
}

fn unit(key: &str, v: f64) -> Result<(), CliError> {
    check((0.0..=1.0).contains(&v), key, || format!("must lie in [0, 1], got {v}"))
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    check(v.is_finite() && v > 0.0, key, || format!("must be positive, got {v}"))
}

fn at_least(key: &str, v: usize, min: usize) -> Result<(), CliError> {
    check(v >= min, key, || format!("must be at least {min}, got {v}"))
}

fn planet(key: &str, s: &str) -> Result<Planet, CliError> {
    s.parse().map_err(|e| field_err(key, e))
}

/// Applies defaults to `file` and validates every field.
pub fn resolve(file: &ConfigFile) -> Result<RunConfig, CliError> {
    let d = RtbaConfig::default();
    let ds = SgaConfig::default();
    let dl = LttoSettings::default();
    let dn = NmOptions::default();

    let mode = file.mode.unwrap_or(Mode::Rtba);
    let sequence = match &file.sequence {
        Some(s) => Some(s.parse::<Sequence>().map_err(|e| field_err("sequence", e))?),
        None => None,
    };
    if mode != Mode::Rtba && sequence.is_none() {
        return Err(field_err("sequence", format!("required in {mode} mode")));
    }

    let departure_body = match &file.departure_body {
        Some(s) => planet("departure_body", s)?,
        None => d.departure_body,
    };
    let arrival_body = match &file.arrival_body {
        Some(s) => planet("arrival_body", s)?,
        None => d.arrival_body,
    };
    check(departure_body != arrival_body, "arrival_body", || "must differ from departure_body".into())?;

    let q = file.q.unwrap_or(d.q);
    check(q > 0.0 && q <= 1.0, "q", || format!("must lie in (0, 1], got {q}"))?;
    let xi = file.xi.unwrap_or(d.xi);
    unit("xi", xi)?;
    let chi = file.chi.unwrap_or(d.chi);
    unit("chi", chi)?;
    let topology_probability = file.topology_probability.unwrap_or(d.topology_probability);
    unit("topology_probability", topology_probability)?;

    let max_gas = file.max_gas.unwrap_or(d.max_gas);
    check(max_gas <= 8, "max_gas", || format!("must be at most 8, got {max_gas}"))?;
    let p = file.p.unwrap_or(d.p);
    at_least("p", p, 1)?;
    let cpu_count = file.cpu_count.unwrap_or(d.cpu_count);
    at_least("cpu_count", cpu_count, 1)?;
    let max_recursions = file.max_recursions.unwrap_or(d.max_recursions);
    at_least("max_recursions", max_recursions, 1)?;

    let window =
        (file.window_start_mjd.unwrap_or(d.departure_window.0), file.window_end_mjd.unwrap_or(d.departure_window.1));
    check(window.0.is_finite() && window.0 >= 0.0, "window_start_mjd", || format!("invalid epoch {}", window.0))?;
    check(window.1.is_finite() && window.1 > window.0, "window_end_mjd", || {
        format!("must exceed window_start_mjd ({}), got {}", window.0, window.1)
    })?;

    let population_size = file.population_size.unwrap_or(ds.population_size);
    check(population_size >= 4 && population_size.is_multiple_of(2), "population_size", || {
        format!("must be even and at least 4, got {population_size}")
    })?;
    let generations = file.generations.unwrap_or(ds.generations);
    at_least("generations", generations, 1)?;
    let crossover_rate = file.crossover_rate.unwrap_or(ds.crossover_rate);
    unit("crossover_rate", crossover_rate)?;
    if let Some(m) = file.mutation_rate {
        unit("mutation_rate", m)?;
    }
    let mutation_sigma = file.mutation_sigma.unwrap_or(ds.mutation_sigma);
    positive("mutation_sigma", mutation_sigma)?;
    let tournament_size = file.tournament_size.unwrap_or(ds.tournament_size);
    check((1..=population_size).contains(&tournament_size), "tournament_size", || {
        format!("must lie in [1, population_size], got {tournament_size}")
    })?;
    let elitism_count = file.elitism_count.unwrap_or(ds.elitism_count);
    check(elitism_count < population_size, "elitism_count", || {
        format!("must be below population_size, got {elitism_count}")
    })?;

    let free_count = file.free_count.unwrap_or(dl.free_count);
    check(free_count <= MAX_FREE_COUNT, "free_count", || {
        format!("must be at most {MAX_FREE_COUNT}, got {free_count}")
    })?;
    let tof_min_days = file.tof_min_days.unwrap_or(dl.tof_min_days);
    positive("tof_min_days", tof_min_days)?;
    let tof_max_days = file.tof_max_days.unwrap_or(dl.tof_max_days);
    check(tof_max_days.is_finite() && tof_max_days > tof_min_days, "tof_max_days", || {
        format!("must exceed tof_min_days ({tof_min_days}), got {tof_max_days}")
    })?;
    if tof_max_days > TOF_MAX_DAYS {
        warn!("tof_max_days {tof_max_days} exceeds the default ceiling of {TOF_MAX_DAYS} days");
    }
    let window_days = file.window_days.unwrap_or(dl.window_days);
    positive("window_days", window_days)?;
    let coeff_bound = file.coeff_bound.unwrap_or(dl.coeff_bound);
    positive("coeff_bound", coeff_bound)?;
    if let Some(a) = file.max_thrust_accel {
        positive("max_thrust_accel", a)?;
    }

    let nm_tol = file.nm_tol.unwrap_or(dn.tol);
    positive("nm_tol", nm_tol)?;
    let nm_max_iter = file.nm_max_iter.unwrap_or(dn.max_iter);
    at_least("nm_max_iter", nm_max_iter, 1)?;

    if let Some(m) = file.spacecraft_mass_kg {
        positive("spacecraft_mass_kg", m)?;
    }
    if let Some(isp) = file.specific_impulse_s {
        positive("specific_impulse_s", isp)?;
    }

    if let Some(seq) = &sequence {
        check(seq.gas() <= 8, "sequence", || format!("at most 8 flybys, got {}", seq.gas()))?;
    }
    if mode == Mode::Grid {
        let span = (window.1 - window.0) / window_days;
        check((span - span.round()).abs() < 1e-9, "window_end_mjd", || {
            format!("grid mode needs a window spanning a whole number of {window_days}-day intervals")
        })?;
    }

    let seed = file.seed.unwrap_or(0);
    let rtba = RtbaConfig {
        departure_body,
        arrival_body,
        max_gas,
        q,
        p,
        cpu_count,
        max_recursions,
        xi,
        chi,
        departure_window: window,
        seed,
        topology_probability,
        sga: SgaConfig {
            population_size,
            generations,
            crossover_rate,
            mutation_rate: file.mutation_rate,
            mutation_sigma,
            tournament_size,
            elitism_count,
            seed,
        },
        ltto: LttoSettings {
            free_count,
            tof_min_days,
            tof_max_days,
            window_days,
            coeff_bound,
            max_thrust_accel: file.max_thrust_accel,
        },
    };
    rtba.validate().map_err(|e| CliError::Config(e.to_string()))?;

    Ok(RunConfig {
        mode,
        sequence,
        output_dir: file.output_dir.clone().unwrap_or_else(|| PathBuf::from("output")),
        seed,
        elements_file: file.elements_file.clone(),
        rtba,
        nm: NmOptions { tol: nm_tol, max_iter: nm_max_iter, ..dn },
        spacecraft_mass_kg: file.spacecraft_mass_kg,
        specific_impulse_s: file.specific_impulse_s,
    })
}

/// Reads `path` (or nothing), applies `overrides` and validates.
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> Result<(ConfigFile, RunConfig), CliError> {
    let mut file = match path {
        Some(p) => ConfigFile::from_path(p)?,
        None => ConfigFile::default(),
    };
    overrides.apply(&mut file);
    let config = resolve(&file)?;
    Ok((file, config))
}
