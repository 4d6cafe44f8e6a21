//! Run configurations and the command driver behind the `semistab` binary.
//!
//! Configurations are flat TOML documents. Every key is optional except the
//! ones a command needs (`nu` for the KS commands, `seed` for randomized
//! commands); unknown keys are rejected. Outputs are written atomically into
//! the output directory as `<command>.csv` and/or `<command>.json`.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::analysis::{self, classify, frechet_ratio_scan, ProbeConfig};
use crate::error::Error as ModelError;
use crate::ks::{self, KsModel};
use crate::quasilinear::{self, QuasilinearTestbed};
use crate::state::{SequenceState, SpectralField, State};
use crate::zwart;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SimulateKs,
    KsEigs,
    ZwartOrbit,
    ZwartTruncation,
    FrechetScan,
    QuasilinearBound,
    Classify,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::SimulateKs,
        Command::KsEigs,
        Command::ZwartOrbit,
        Command::ZwartTruncation,
        Command::FrechetScan,
        Command::QuasilinearBound,
        Command::Classify,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::SimulateKs => "simulate-ks",
            Command::KsEigs => "ks-eigs",
            Command::ZwartOrbit => "zwart-orbit",
            Command::ZwartTruncation => "zwart-truncation",
            Command::FrechetScan => "frechet-scan",
            Command::QuasilinearBound => "quasilinear-bound",
            Command::Classify => "classify",
        }
    }

    fn randomized(self) -> bool {
        matches!(self, Command::FrechetScan | Command::Classify)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| ConfigError::OutOfRange {
                key: "command".into(),
                reason: format!("unknown command `{s}`"),
            })
    }
}

/// Which system `frechet-scan` and `classify` operate on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Ks,
    Zwart,
    Quasilinear,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config is not valid TOML: {0}")]
    Syntax(String),
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("key `{key}` out of range: {reason}")]
    OutOfRange { key: String, reason: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}` has the wrong type, expected {expected}")]
    WrongType { key: String, expected: &'static str },
}

impl ConfigError {
    /// The key the error refers to, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax(_) => None,
            ConfigError::MissingKey(k) | ConfigError::UnknownKey(k) => Some(k),
            ConfigError::OutOfRange { key, .. } | ConfigError::WrongType { key, .. } => Some(key),
        }
    }
}

/// A validated run configuration with every default resolved.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelKind,
    pub nu: Option<f64>,
    pub n_modes: usize,
    pub dt: f64,
    pub t_final: f64,
    pub z_e: f64,
    pub epsilon_c: f64,
    /// Initial perturbation amplitude (`simulate-ks`: `z_e + amplitude cos x`).
    pub amplitude: f64,
    pub guard: f64,
    pub sample_every: usize,
    /// Zwart coordinate for `zwart-orbit`.
    pub n: usize,
    /// Largest mode (`ks-eigs`) or truncation size (`zwart-truncation`).
    pub n_max: usize,
    pub t_step: f64,
    pub z0_scale: f64,
    pub t: f64,
    pub scales: Vec<f64>,
    pub deltas: Vec<f64>,
    pub seed: Option<u64>,
    pub samples: usize,
    pub output_path: PathBuf,
}

const KEYS: &[&str] = &[
    "command",
    "model",
    "nu",
    "n_modes",
    "dt",
    "t_final",
    "z_e",
    "epsilon_c",
    "amplitude",
    "guard",
    "sample_every",
    "n",
    "n_max",
    "t_step",
    "z0_scale",
    "t",
    "scales",
    "deltas",
    "seed",
    "samples",
    "output_path",
];

struct Doc(toml::Table);

impl Doc {
    fn float(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(f)) => Ok(Some(*f)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(ConfigError::WrongType {
                key: key.into(),
                expected: "number",
            }),
        }
    }

    fn int(&self, key: &str) -> Result<Option<i64>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) => Ok(Some(*i)),
            Some(_) => Err(ConfigError::WrongType {
                key: key.into(),
                expected: "integer",
            }),
        }
    }

    fn string(&self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(ConfigError::WrongType {
                key: key.into(),
                expected: "string",
            }),
        }
    }

    fn floats(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let wrong = || ConfigError::WrongType {
            key: key.into(),
            expected: "array of numbers",
        };
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    toml::Value::Float(f) => Ok(*f),
                    toml::Value::Integer(i) => Ok(*i as f64),
                    _ => Err(wrong()),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(_) => Err(wrong()),
        }
    }
}

fn out_of_range(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::OutOfRange {
        key: key.into(),
        reason: reason.into(),
    }
}

fn positive(key: &str, value: f64) -> Result<f64, ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(out_of_range(key, format!("must be > 0, got {value}")))
    }
}

fn positive_int(key: &str, value: i64, min: i64) -> Result<usize, ConfigError> {
    if value >= min {
        Ok(value as usize)
    } else {
        Err(out_of_range(key, format!("must be >= {min}, got {value}")))
    }
}

fn descending(key: &str, values: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
    if values.is_empty() {
        return Err(out_of_range(key, "must not be empty"));
    }
    if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(out_of_range(key, "entries must be positive"));
    }
    if values.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(out_of_range(key, "entries must be strictly decreasing"));
    }
    Ok(values)
}

const DEFAULT_SCALES: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
const ZWART_DELTAS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Parse a configuration that names its own `command`.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse(text, None)
}

/// Parse a configuration for `command`; a `command` key in the document, if
/// present, must agree.
pub fn parse_config_for(command: Command, text: &str) -> Result<RunConfig, ConfigError> {
    parse(text, Some(command))
}

fn parse(text: &str, command: Option<Command>) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    if let Some(key) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(key.clone()));
    }
    let doc = Doc(table);

    let named = doc.string("command")?.map(|s| s.parse::<Command>()).transpose()?;
    let command = match (command, named) {
        (Some(c), Some(n)) if c != n => {
            return Err(out_of_range("command", format!("config names `{n}` but `{c}` was requested")))
        }
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => return Err(ConfigError::MissingKey("command".into())),
    };

    let model = match doc.string("model")?.as_deref() {
        None | Some("ks") => ModelKind::Ks,
        Some("zwart") => ModelKind::Zwart,
        Some("quasilinear") => ModelKind::Quasilinear,
        Some(other) => return Err(out_of_range("model", format!("expected ks, zwart or quasilinear, got `{other}`"))),
    };
    let uses_ks = matches!(command, Command::SimulateKs | Command::KsEigs)
        || (matches!(command, Command::FrechetScan | Command::Classify) && model == ModelKind::Ks);
    if command == Command::Classify && model == ModelKind::Quasilinear {
        return Err(out_of_range("model", "classify supports ks and zwart"));
    }

    let nu = match doc.float("nu")? {
        Some(v) => Some(positive("nu", v)?),
        None if uses_ks => return Err(ConfigError::MissingKey("nu".into())),
        None => None,
    };
    let default_modes = if uses_ks { ks::DEFAULT_N_MODES } else { quasilinear::DEFAULT_N_MODES };
    let n_modes = match doc.int("n_modes")? {
        Some(v) => positive_int("n_modes", v, if uses_ks { 4 } else { 1 })?,
        None => default_modes,
    };
    let dt = positive("dt", doc.float("dt")?.unwrap_or(ks::DEFAULT_DT))?;
    let default_t_final = match command {
        Command::ZwartOrbit => 100.0,
        Command::QuasilinearBound => 1.0,
        _ => 20.0,
    };
    let t_final = positive("t_final", doc.float("t_final")?.unwrap_or(default_t_final))?;
    let z_e = doc.float("z_e")?.unwrap_or(0.0);
    if !z_e.is_finite() {
        return Err(out_of_range("z_e", "must be finite"));
    }
    let epsilon_c = doc.float("epsilon_c")?.unwrap_or(0.5);
    if !(epsilon_c >= 0.0 && epsilon_c.is_finite()) {
        return Err(out_of_range("epsilon_c", format!("must be >= 0, got {epsilon_c}")));
    }
    let amplitude = doc.float("amplitude")?.unwrap_or(1e-3);
    if !amplitude.is_finite() {
        return Err(out_of_range("amplitude", "must be finite"));
    }
    let guard = positive("guard", doc.float("guard")?.unwrap_or(ks::DEFAULT_GUARD))?;
    let sample_every = positive_int("sample_every", doc.int("sample_every")?.unwrap_or(10), 1)?;
    let n = positive_int("n", doc.int("n")?.unwrap_or(10), 1)?;
    let default_n_max = if command == Command::ZwartTruncation { 100 } else { 4 };
    let n_max = positive_int("n_max", doc.int("n_max")?.unwrap_or(default_n_max), if command == Command::KsEigs { 0 } else { 1 })?;
    if command == Command::KsEigs && n_max > n_modes {
        return Err(out_of_range("n_max", format!("must be <= n_modes = {n_modes}")));
    }
    let t_step = positive("t_step", doc.float("t_step")?.unwrap_or(1.0))?;
    let z0_scale = doc.float("z0_scale")?.unwrap_or(0.9);
    if !z0_scale.is_finite() {
        return Err(out_of_range("z0_scale", "must be finite"));
    }
    let t = positive("t", doc.float("t")?.unwrap_or(1.0))?;
    let scales = descending("scales", doc.floats("scales")?.unwrap_or_else(|| DEFAULT_SCALES.to_vec()))?;
    let default_deltas = if model == ModelKind::Zwart { ZWART_DELTAS.to_vec() } else { ProbeConfig::new(0).deltas };
    let deltas = descending("deltas", doc.floats("deltas")?.unwrap_or(default_deltas))?;
    let seed = match doc.int("seed")? {
        Some(s) if s < 0 => return Err(out_of_range("seed", "must be >= 0")),
        Some(s) => Some(s as u64),
        None => None,
    };
    let samples = positive_int("samples", doc.int("samples")?.unwrap_or(20), 1)?;
    let output_path = PathBuf::from(doc.string("output_path")?.unwrap_or_else(|| ".".into()));

    Ok(RunConfig {
        command,
        model,
        nu,
        n_modes,
        dt,
        t_final,
        z_e,
        epsilon_c,
        amplitude,
        guard,
        sample_every,
        n,
        n_max,
        t_step,
        z0_scale,
        t,
        scales,
        deltas,
        seed,
        samples,
        output_path,
    })
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// Process exit status: 1 for configuration and I/O errors, 2 for a
    /// computed instability that escaped as an error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Model(e) if e.is_instability() => 2,
            _ => 1,
        }
    }
}

/// Files written by a run and the exit status it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
}

/// Render a float with 17 significant digits, which round-trips any `f64`.
/// Negative zero is written as zero.
pub fn fmt_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// Collects output files and writes each one atomically; on drop without
/// `commit` every file written so far is removed.
struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let io = |source| RunError::Io {
            path: path.clone(),
            source,
        };
        let result = (|| {
            let mut file = fs::File::create(&tmp)?;
            file.write_all(contents)?;
            file.sync_all()?;
            fs::rename(&tmp, &path)
        })();
        if let Err(e) = result {
            let _ = fs::remove_file(&tmp);
            return Err(io(e));
        }
        self.written.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), RunError> {
        let mut text = String::from(header);
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write(name, text.as_bytes())
    }

    fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.committed {
            for path in &self.written {
                let _ = fs::remove_file(path);
            }
        }
    }
}

fn require_seed(config: &RunConfig) -> Result<u64, ConfigError> {
    config.seed.ok_or_else(|| ConfigError::MissingKey("seed".into()))
}

fn ks_model(config: &RunConfig) -> Result<KsModel, RunError> {
    let nu = config.nu.ok_or_else(|| ConfigError::MissingKey("nu".into()))?;
    Ok(KsModel::new(nu, config.n_modes, config.dt)?.with_guard(config.guard)?)
}

fn to_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("report types serialize")
}

/// Execute `config`, writing outputs into its `output_path`.
pub fn run(config: &RunConfig) -> Result<RunOutcome, RunError> {
    if config.command.randomized() {
        require_seed(config)?;
    }
    let mut out = Outputs::new(&config.output_path)?;
    let stem = config.command.as_str();
    let exit_code = match config.command {
        Command::SimulateKs => run_simulate_ks(config, &mut out, stem)?,
        Command::KsEigs => {
            let model = ks_model(config)?;
            let modes: Vec<i64> = (0..=config.n_max as i64).collect();
            let eigs = ks::eigenvalues_at_constant(&model, config.z_e, modes.iter().copied())?;
            out.csv(
                &format!("{stem}.csv"),
                "n,re,im",
                modes.iter().zip(&eigs).map(|(n, l)| vec![n.to_string(), fmt_f64(l.re), fmt_f64(l.im)]),
            )?;
            0
        }
        Command::ZwartOrbit => {
            let steps = (config.t_final / config.t_step).round() as usize;
            let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * config.t_step).collect();
            let orbit = zwart::counterexample_orbit(config.n, &grid)?;
            out.csv(
                &format!("{stem}.csv"),
                "t,norm,dist_E",
                orbit
                    .times()
                    .iter()
                    .zip(orbit.states())
                    .zip(orbit.norms())
                    .map(|((t, z), r)| vec![fmt_f64(*t), fmt_f64(*r), fmt_f64(zwart::dist_to_equilibria(z))]),
            )?;
            let z0 = SequenceState::new([(config.n, 1.0 / config.n as f64)])?;
            let t_end = *grid.last().expect("grid has t = 0");
            let linear_end = zwart::linear_solution(&z0, t_end)?.l2_norm();
            out.json(
                &format!("{stem}.json"),
                &json!({
                    "command": stem,
                    "n": config.n,
                    "t_final": t_end,
                    "initial_norm": orbit.norms()[0],
                    "min_norm": orbit.norms().iter().copied().fold(f64::INFINITY, f64::min),
                    "max_norm": orbit.norms().iter().copied().fold(0.0, f64::max),
                    "linear_norm_at_t_final": linear_end,
                }),
            )?;
            0
        }
        Command::ZwartTruncation => {
            let z0 = SequenceState::new((1..=config.n_max).map(|n| (n, config.z0_scale / n as f64)))?;
            match zwart::truncated_limit(&z0, config.n_max) {
                Ok(limit) => {
                    out.json(
                        &format!("{stem}.json"),
                        &json!({
                            "command": stem,
                            "n_max": config.n_max,
                            "z0_scale": config.z0_scale,
                            "initial_norm": z0.l2_norm(),
                            "truncated_limit": limit,
                        }),
                    )?;
                    0
                }
                Err(e @ ModelError::BlowUp { .. }) => {
                    out.json(
                        &format!("{stem}.json"),
                        &json!({ "command": stem, "status": "BlowUp", "error": e.to_string() }),
                    )?;
                    2
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::FrechetScan => run_frechet_scan(config, &mut out, stem)?,
        Command::QuasilinearBound => {
            let tb = QuasilinearTestbed::new(config.n_modes, config.epsilon_c)?.with_dt(config.dt)?;
            let z0 = tb.w().scaled(config.z_e);
            let direction = tb.w().clone();
            let report = quasilinear::verify_remainder_bound(&tb, &z0, &direction, &config.scales, config.t_final)?;
            out.csv(
                &format!("{stem}.csv"),
                "scale,remainder_norm,ratio",
                report
                    .checks
                    .iter()
                    .map(|c| vec![fmt_f64(c.scale), fmt_f64(c.max_remainder), fmt_f64(c.max_remainder / c.scale)]),
            )?;
            out.json(&format!("{stem}.json"), &json!({ "command": stem, "report": to_json(&report) }))?;
            0
        }
        Command::Classify => {
            let mut probes = ProbeConfig::new(require_seed(config)?);
            probes.deltas = config.deltas.clone();
            probes.samples = config.samples;
            probes.frechet_time = config.t;
            probes.frechet_scales = config.scales.clone();
            let verdict = match config.model {
                ModelKind::Ks => classify(&ks::flow_pair(&ks_model(config)?, config.z_e), &probes),
                ModelKind::Zwart => classify(&zwart::flow_pair(), &probes),
                ModelKind::Quasilinear => unreachable!("rejected while parsing"),
            };
            out.json(
                &format!("{stem}.json"),
                &json!({ "command": stem, "model": config.model, "probes": to_json(&probes), "verdict": to_json(&verdict) }),
            )?;
            0
        }
    };
    Ok(RunOutcome {
        exit_code,
        files: out.commit(),
    })
}

fn run_simulate_ks(config: &RunConfig, out: &mut Outputs, stem: &str) -> Result<i32, RunError> {
    let model = ks_model(config)?;
    let z0 = SpectralField::axpy(
        1.0,
        &SpectralField::cosine(model.n_modes(), 1, config.amplitude)?,
        &SpectralField::constant(model.n_modes(), config.z_e),
    )?;
    let lambda_1 = ks::eigenvalues_at_constant(&model, config.z_e, [1])?[0];
    let header = json!({
        "command": stem,
        "nu": model.nu(),
        "n_modes": model.n_modes(),
        "dt": model.dt(),
        "t_final": config.t_final,
        "z_e": config.z_e,
        "amplitude": config.amplitude,
        "lambda_1": { "re": lambda_1.re, "im": lambda_1.im },
    });
    match ks::simulate_sampled(&model, &z0, config.t_final, config.sample_every) {
        Ok(traj) => {
            out.csv(
                &format!("{stem}.csv"),
                "t,norm,dist_equilibria,mean",
                traj.times().iter().zip(traj.states()).map(|(t, z)| {
                    vec![fmt_f64(*t), fmt_f64(z.l2_norm()), fmt_f64(ks::dist_to_constants(z)), fmt_f64(z.mean())]
                }),
            )?;
            let fit = analysis::estimate_growth_constants(&traj).ok();
            let mut summary = header;
            summary["status"] = json!("ok");
            summary["fitted_rate"] = json!(fit.map(|g| -g.gamma));
            summary["class"] = json!(match fit {
                Some(g) if g.gamma > 0.0 => "Decaying",
                Some(_) => "Growing",
                None => "Inconclusive",
            });
            out.json(&format!("{stem}.json"), &summary)?;
            Ok(0)
        }
        Err(e @ ModelError::StepUnstable { .. }) => {
            let mut summary = header;
            summary["status"] = json!("StepUnstable");
            summary["class"] = json!("Unstable");
            summary["error"] = json!(e.to_string());
            out.json(&format!("{stem}.json"), &summary)?;
            Ok(2)
        }
        Err(e) => Err(e.into()),
    }
}

fn run_frechet_scan(config: &RunConfig, out: &mut Outputs, stem: &str) -> Result<i32, RunError> {
    let seed = require_seed(config)?;
    let mut rng = analysis::rng_for(seed, 0);
    let report = match config.model {
        ModelKind::Ks => {
            let model = ks_model(config)?;
            let pair = ks::flow_pair(&model, config.z_e);
            let direction = pair.unit_direction(&mut rng, config.scales[0])?;
            frechet_ratio_scan(&pair, &direction, &config.scales, config.t)?
        }
        ModelKind::Zwart => {
            let pair = zwart::flow_pair();
            let direction = pair.unit_direction(&mut rng, config.scales[0])?;
            frechet_ratio_scan(&pair, &direction, &config.scales, config.t)?
        }
        ModelKind::Quasilinear => {
            let tb = QuasilinearTestbed::new(config.n_modes, config.epsilon_c)?.with_dt(config.dt)?;
            let pair = quasilinear::flow_pair(&tb, tb.w().scaled(config.z_e));
            let direction = pair.unit_direction(&mut rng, config.scales[0])?;
            frechet_ratio_scan(&pair, &direction, &config.scales, config.t)?
        }
    };
    out.csv(
        &format!("{stem}.csv"),
        "scale,remainder_norm,ratio",
        report
            .scales
            .iter()
            .zip(&report.remainders)
            .zip(&report.ratios)
            .map(|((s, r), q)| vec![fmt_f64(*s), fmt_f64(*r), fmt_f64(*q)]),
    )?;
    out.json(
        &format!("{stem}.json"),
        &json!({ "command": stem, "model": config.model, "seed": seed, "report": to_json(&report) }),
    )?;
    Ok(0)
}
