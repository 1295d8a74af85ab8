//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored, unknown or repeated keys are
//! errors, and every model parameter is required. A `manifest.csv` written by
//! `simulate` is accepted too: its `config` rows are read back as keys.

use std::fmt;
use std::path::{Path, PathBuf};

use epiwave_core::model::{disease_free_equilibrium, endemic_equilibrium};
use epiwave_core::solver::{Grid1D, IcSpec, SimConfig, TimeStep};
use epiwave_core::{ModelParams, State};

use crate::output::num;
use crate::CliError;

pub const PARAM_KEYS: [&str; 10] = ModelParams::FIELD_NAMES;

pub const OPTIONAL_KEYS: [&str; 9] = [
    "grid.length",
    "grid.n",
    "time.t_end",
    "time.dt",
    "time.snapshot_every",
    "ic.split_at",
    "ic.left",
    "ic.right",
    "out.dir",
];

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// Malformed text, unknown/duplicate/missing keys, unparsable values.
    Parse(String),
    /// Well-formed but out of range.
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "config parse error: {m}"),
            ConfigError::Invalid(m) => write!(f, "invalid config: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        let code = match e {
            ConfigError::Parse(_) => 2,
            ConfigError::Invalid(_) => 3,
        };
        CliError::new(code, e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub grid_length: f64,
    pub grid_n: usize,
    pub t_end: f64,
    pub dt: TimeStep,
    pub snapshot_every: f64,
    pub split_at: f64,
    pub ic_left: Option<State>,
    pub ic_right: Option<State>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ModelParams::table2(),
            grid_length: 500.0,
            grid_n: 1001,
            t_end: 50.0,
            dt: TimeStep::Auto,
            snapshot_every: 0.5,
            split_at: 200.0,
            ic_left: None,
            ic_right: None,
            out_dir: None,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>().map_err(|_| ConfigError::Parse(format!("key `{key}`: expected a number, got `{v}`")))
}

fn parse_state(key: &str, v: &str) -> Result<State, ConfigError> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(ConfigError::Parse(format!("key `{key}`: expected four comma-separated numbers")));
    }
    let mut s = [0.0; 4];
    for (slot, part) in s.iter_mut().zip(parts) {
        *slot = parse_f64(key, part)?;
    }
    Ok(s)
}

fn state_text(s: &State) -> String {
    s.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")
}

/// Splits config text into `(line, key, value)` triples.
fn key_values(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse(format!("line {}: expected `key = value`", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Parse(format!("line {}: empty key or value", i + 1)));
        }
        out.push((i + 1, k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Reads the `config` section of a manifest back as key/value pairs.
fn manifest_values(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ConfigError::Parse(format!("manifest: {e}")))?;
        if rec.len() != 3 {
            return Err(ConfigError::Parse(format!("manifest row {}: expected 3 fields", i + 2)));
        }
        if &rec[0] == "config" {
            out.push((i + 2, rec[1].to_string(), rec[2].to_string()));
        }
    }
    Ok(out)
}

pub const MANIFEST_HEADER: &str = "section,key,value";

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let pairs = if text.lines().next().map(str::trim) == Some(MANIFEST_HEADER) {
            manifest_values(text)?
        } else {
            key_values(text)?
        };

        let mut cfg = RunConfig::default();
        let mut params = [f64::NAN; 10];
        let mut seen: Vec<String> = Vec::new();
        for (line, key, value) in pairs {
            if seen.contains(&key) {
                return Err(ConfigError::Parse(format!("line {line}: duplicate key `{key}`")));
            }
            if let Some(idx) = PARAM_KEYS.iter().position(|k| *k == key) {
                params[idx] = parse_f64(&key, &value)?;
            } else {
                match key.as_str() {
                    "grid.length" => cfg.grid_length = parse_f64(&key, &value)?,
                    "grid.n" => {
                        cfg.grid_n = value.parse().map_err(|_| {
                            ConfigError::Parse(format!("key `grid.n`: expected a positive integer, got `{value}`"))
                        })?
                    }
                    "time.t_end" => cfg.t_end = parse_f64(&key, &value)?,
                    "time.dt" => {
                        cfg.dt = if value.eq_ignore_ascii_case("auto") {
                            TimeStep::Auto
                        } else {
                            TimeStep::Fixed(parse_f64(&key, &value)?)
                        }
                    }
                    "time.snapshot_every" => cfg.snapshot_every = parse_f64(&key, &value)?,
                    "ic.split_at" => cfg.split_at = parse_f64(&key, &value)?,
                    "ic.left" => cfg.ic_left = Some(parse_state(&key, &value)?),
                    "ic.right" => cfg.ic_right = Some(parse_state(&key, &value)?),
                    "out.dir" => cfg.out_dir = Some(PathBuf::from(value)),
                    _ => return Err(ConfigError::Parse(format!("line {line}: unknown key `{key}`"))),
                }
            }
            seen.push(key);
        }
        for (k, v) in PARAM_KEYS.iter().zip(params) {
            if v.is_nan() && !seen.iter().any(|s| s == k) {
                return Err(ConfigError::Parse(format!("missing required key `{k}`")));
            }
        }
        cfg.params = ModelParams {
            mu: params[0],
            eta: params[1],
            phi: params[2],
            beta1: params[3],
            beta2: params[4],
            beta: params[5],
            b1: params[6],
            b2: params[7],
            d_h: params[8],
            d_v: params[9],
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Grid1D::new(self.grid_length, self.grid_n).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(ConfigError::Invalid(what.to_string())) };
        check(self.t_end.is_finite() && self.t_end > 0.0, "time.t_end must be positive")?;
        if let TimeStep::Fixed(dt) = self.dt {
            check(dt.is_finite() && dt > 0.0, "time.dt must be positive or `auto`")?;
        }
        check(
            self.snapshot_every.is_finite() && self.snapshot_every >= 0.0,
            "time.snapshot_every must be nonnegative",
        )?;
        check(
            self.split_at > 0.0 && self.split_at < self.grid_length,
            "ic.split_at must lie strictly inside the domain",
        )?;
        for s in self.ic_left.iter().chain(&self.ic_right) {
            check(s.iter().all(|v| v.is_finite() && *v >= 0.0), "initial states must be finite and nonnegative")?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid1D {
        Grid1D::new(self.grid_length, self.grid_n).expect("validated grid")
    }

    /// The simulation set-up: `ic.left` (default endemic state) up to
    /// `ic.split_at`, `ic.right` (default disease-free state) beyond.
    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let p = &self.params;
        let left = match self.ic_left {
            Some(s) => s,
            None => endemic_equilibrium(p)
                .map_err(|e| {
                    CliError::new(3, format!("{e}; set ic.left to simulate without an endemic state"))
                })?
                .to_array(),
        };
        let right = match self.ic_right {
            Some(s) => s,
            None => disease_free_equilibrium(p).map_err(|e| CliError::new(3, e.to_string()))?.to_array(),
        };
        Ok(SimConfig {
            grid: self.grid(),
            t_end: self.t_end,
            dt: self.dt,
            snapshot_every: self.snapshot_every,
            ic: IcSpec::split(self.split_at, left, right),
        })
    }

    /// Every key with its effective value, in canonical order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> =
            PARAM_KEYS.iter().zip(self.params.values()).map(|(k, v)| (k.to_string(), num(v))).collect();
        out.push(("grid.length".into(), num(self.grid_length)));
        out.push(("grid.n".into(), self.grid_n.to_string()));
        out.push(("time.t_end".into(), num(self.t_end)));
        out.push((
            "time.dt".into(),
            match self.dt {
                TimeStep::Auto => "auto".into(),
                TimeStep::Fixed(dt) => num(dt),
            },
        ));
        out.push(("time.snapshot_every".into(), num(self.snapshot_every)));
        out.push(("ic.split_at".into(), num(self.split_at)));
        if let Some(s) = &self.ic_left {
            out.push(("ic.left".into(), state_text(s)));
        }
        if let Some(s) = &self.ic_right {
            out.push(("ic.right".into(), state_text(s)));
        }
        if let Some(d) = &self.out_dir {
            out.push(("out.dir".into(), d.display().to_string()));
        }
        out
    }
}
