//! JSON configuration documents.
//!
//! A document is either a sweep or a validation run, selected by `"kind"`.
//! Unknown keys are rejected everywhere.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_MAX_ROWS: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 20_261_017;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Config {
    Sweep(SweepSpec),
    Validation(ValidationConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Gsteep,
    Psteep,
    Msteep,
    Classic,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Gsteep => "gsteep",
            Scheme::Psteep => "psteep",
            Scheme::Msteep => "msteep",
            Scheme::Classic => "classic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Parameter grid for one sweep; every axis is optional and each scheme
/// requires its own set.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub a: Option<Axis>,
    pub b: Option<Axis>,
    pub alpha: Option<Axis>,
    pub beta: Option<Axis>,
    pub psk_order: Option<Axis>,
    pub n_a: Option<Axis>,
    pub n_b: Option<Axis>,
    pub n_e: Option<Axis>,
    pub p_a: Option<Axis>,
    pub p_b: Option<Axis>,
    pub p_u: Option<Axis>,
    pub users: Option<Axis>,
    pub sigma2: Option<Axis>,
    pub sigma2_a: Option<Axis>,
    pub sigma2_e: Option<Axis>,
    pub sigma2_ea: Option<Axis>,
}

/// Axis names in grid order; the first varies slowest.
pub const AXES: [&str; 16] = [
    "a", "b", "alpha", "beta", "psk_order", "n_a", "n_b", "n_e", "p_a", "p_b", "p_u", "users", "sigma2", "sigma2_a",
    "sigma2_e", "sigma2_ea",
];

/// Axes that must hold positive integers.
pub const INTEGER_AXES: [&str; 5] = ["psk_order", "n_a", "n_b", "n_e", "users"];

impl Grid {
    fn axes(&self) -> [&Option<Axis>; 16] {
        [
            &self.a,
            &self.b,
            &self.alpha,
            &self.beta,
            &self.psk_order,
            &self.n_a,
            &self.n_b,
            &self.n_e,
            &self.p_a,
            &self.p_b,
            &self.p_u,
            &self.users,
            &self.sigma2,
            &self.sigma2_a,
            &self.sigma2_e,
            &self.sigma2_ea,
        ]
    }

    fn axis_mut(&mut self, name: &str) -> Option<&mut Option<Axis>> {
        Some(match name {
            "a" => &mut self.a,
            "b" => &mut self.b,
            "alpha" => &mut self.alpha,
            "beta" => &mut self.beta,
            "psk_order" => &mut self.psk_order,
            "n_a" => &mut self.n_a,
            "n_b" => &mut self.n_b,
            "n_e" => &mut self.n_e,
            "p_a" => &mut self.p_a,
            "p_b" => &mut self.p_b,
            "p_u" => &mut self.p_u,
            "users" => &mut self.users,
            "sigma2" => &mut self.sigma2,
            "sigma2_a" => &mut self.sigma2_a,
            "sigma2_e" => &mut self.sigma2_e,
            "sigma2_ea" => &mut self.sigma2_ea,
            _ => return None,
        })
    }

    /// Sets one axis from `name=value`, where `value` uses the same syntax
    /// as a JSON string axis or is a plain number.
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (name, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected name=value, got {assignment:?}")))?;
        let slot = self
            .axis_mut(name.trim())
            .ok_or_else(|| CliError::Config(format!("unknown parameter {:?}; known: {}", name.trim(), AXES.join(", "))))?;
        *slot = Some(Axis::Range(value.trim().to_string()));
        Ok(())
    }

    /// Names of the axes that are set.
    pub fn present(&self) -> Vec<&'static str> {
        AXES.iter().zip(self.axes()).filter(|(_, a)| a.is_some()).map(|(n, _)| *n).collect()
    }

    /// Expanded values of every set axis, in [`AXES`] order.
    pub fn expand(&self) -> Result<Vec<(&'static str, Vec<f64>)>, CliError> {
        let mut out = Vec::new();
        for (name, axis) in AXES.iter().zip(self.axes()) {
            let Some(axis) = axis else { continue };
            let values = axis.values().map_err(|e| CliError::Config(format!("grid.{name}: {e}")))?;
            if values.is_empty() {
                return Err(CliError::Config(format!("grid.{name}: empty grid")));
            }
            for v in &values {
                if !v.is_finite() {
                    return Err(CliError::Config(format!("grid.{name}: value {v} is not finite")));
                }
                if INTEGER_AXES.contains(name) && (v.fract() != 0.0 || *v < 1.0) {
                    return Err(CliError::Config(format!("grid.{name}: {v} is not a positive integer")));
                }
            }
            out.push((*name, values));
        }
        Ok(out)
    }
}

/// One grid axis: a number, a list, or a range string
/// (`"lo..hi x10"` geometric, also with `×` or `*`; `"lo..hi +step"`
/// arithmetic; a bare number).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Value(f64),
    List(Vec<f64>),
    Range(String),
}

const RANGE_SLACK: f64 = 1e-9;

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        match self {
            Axis::Value(v) => Ok(vec![*v]),
            Axis::List(v) => Ok(v.clone()),
            Axis::Range(s) => parse_range(s),
        }
    }
}

fn number(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("cannot parse {:?} as a number", s.trim()))
}

fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let Some((lo, rest)) = text.split_once("..") else {
        return Ok(vec![number(text)?]);
    };
    let lo = number(lo)?;
    let rest = rest.trim();
    let split = rest.find(|c: char| c.is_whitespace()).ok_or_else(|| format!("range {text:?} needs a step, e.g. \"1..1e6 x10\""))?;
    let hi = number(&rest[..split])?;
    let step = rest[split..].trim();
    if hi < lo {
        return Err(format!("range {text:?} has hi < lo"));
    }
    let mut out = Vec::new();
    if let Some(f) = step.strip_prefix(['x', '×', '*']) {
        let f = number(f)?;
        if !(lo > 0.0 && f > 1.0) {
            return Err(format!("geometric range {text:?} needs lo > 0 and factor > 1"));
        }
        let n = ((hi / lo).ln() / f.ln() + RANGE_SLACK).floor() as i64;
        for k in 0..=n {
            out.push(lo * f.powi(k as i32));
        }
    } else if let Some(d) = step.strip_prefix('+') {
        let d = number(d)?;
        if !(d > 0.0) {
            return Err(format!("arithmetic range {text:?} needs a positive step"));
        }
        let n = ((hi - lo) / d + RANGE_SLACK).floor() as i64;
        for k in 0..=n {
            out.push(lo + d * k as f64);
        }
    } else {
        return Err(format!("unknown step {step:?} in range {text:?}; use x<factor> or +<step>"));
    }
    if out.len() > DEFAULT_MAX_ROWS {
        return Err(format!("range {text:?} expands to more than {DEFAULT_MAX_ROWS} points"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub scheme: Scheme,
    /// Seeds random channel draws (MIMO G-STEEP, random M-STEEP, classic).
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_max_rows")]
    pub max_rows: usize,
    pub grid: Grid,
}

impl SweepSpec {
    pub fn single(scheme: Scheme, grid: Grid, seed: u64) -> Self {
        Self { scheme, seed, format: Format::Json, output: None, max_rows: DEFAULT_MAX_ROWS, grid }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize, Serialize)]
pub enum Suite {
    #[serde(rename = "anchor")]
    Anchor,
    #[serde(rename = "oracle")]
    Oracle,
    #[serde(rename = "crosspath")]
    CrossPath,
    #[serde(rename = "propositions")]
    Propositions,
    #[serde(rename = "appendixC")]
    AppendixC,
    #[serde(rename = "appendixD")]
    AppendixD,
    #[serde(rename = "psteep")]
    Psteep,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Anchor, Suite::Oracle, Suite::CrossPath, Suite::Propositions, Suite::AppendixC, Suite::AppendixD, Suite::Psteep];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Anchor => "anchor",
            Suite::Oracle => "oracle",
            Suite::CrossPath => "crosspath",
            Suite::Propositions => "propositions",
            Suite::AppendixC => "appendixC",
            Suite::AppendixD => "appendixD",
            Suite::Psteep => "psteep",
        }
    }
}

pub const MIN_MC_SAMPLES: usize = steep_core::mc_oracle::MIN_SAMPLES;
pub const MIN_PSK_SYMBOLS: usize = steep_core::mc_oracle::MIN_SYMBOLS;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SampleCounts {
    /// Monte Carlo samples per G-STEEP / M-STEEP oracle run.
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    /// Symbols per P-STEEP oracle run.
    #[serde(default = "default_psk_symbols")]
    pub psk_symbols: usize,
    /// Random configurations per scheme in the oracle suite.
    #[serde(default = "default_oracle_configs")]
    pub oracle_configs: usize,
    /// Random draws for the property checks.
    #[serde(default = "default_draws")]
    pub draws: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        Self {
            mc_samples: default_mc_samples(),
            psk_symbols: default_psk_symbols(),
            oracle_configs: default_oracle_configs(),
            draws: default_draws(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "all_suites")]
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub samples: SampleCounts,
    /// Multiplies every numeric tolerance; 0 turns each inexact match into
    /// a failure.
    #[serde(default = "default_tolerance_scale")]
    pub tolerance_scale: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self { seed: default_seed(), suites: all_suites(), samples: SampleCounts::default(), tolerance_scale: 1.0 }
    }
}

impl ValidationConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.samples;
        if s.mc_samples < MIN_MC_SAMPLES {
            return Err(CliError::Config(format!("samples.mc_samples must be at least {MIN_MC_SAMPLES}, got {}", s.mc_samples)));
        }
        if s.psk_symbols < MIN_PSK_SYMBOLS {
            return Err(CliError::Config(format!("samples.psk_symbols must be at least {MIN_PSK_SYMBOLS}, got {}", s.psk_symbols)));
        }
        if s.oracle_configs == 0 || s.draws == 0 {
            return Err(CliError::Config("samples.oracle_configs and samples.draws must be at least 1".into()));
        }
        if self.suites.is_empty() {
            return Err(CliError::Config("suites must not be empty".into()));
        }
        if !(self.tolerance_scale.is_finite() && self.tolerance_scale >= 0.0) {
            return Err(CliError::Config(format!("tolerance_scale must be finite and >= 0, got {}", self.tolerance_scale)));
        }
        Ok(())
    }
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_max_rows() -> usize {
    DEFAULT_MAX_ROWS
}
fn default_mc_samples() -> usize {
    1_000_000
}
fn default_psk_symbols() -> usize {
    100_000
}
fn default_oracle_configs() -> usize {
    20
}
fn default_draws() -> usize {
    1000
}
fn default_tolerance_scale() -> f64 {
    1.0
}
fn all_suites() -> Vec<Suite> {
    Suite::ALL.to_vec()
}

/// Parses a configuration document from JSON text.
pub fn parse_config(text: &str) -> Result<Config, CliError> {
    let config: Config = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    match &config {
        Config::Sweep(spec) => {
            crate::sweep::plan(spec)?;
        }
        Config::Validation(v) => v.validate()?,
    }
    Ok(config)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &std::path::Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
