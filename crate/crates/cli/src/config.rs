//! Run configuration: a flat `key = value` file overlaid by command-line flags.
//!
//! Both sources are collected as raw strings first and parsed by the same
//! code, so a bad value is reported the same way wherever it came from.
//!
//! ```text
//! # comments run to end of line
//! experiment = chsh
//! mode = ER
//! trials = 1000
//! seed = 1
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use erepr::linalg::MAX_DIMENSION;
use erepr::worlds::{build_er_world, EprParams, World, WorldMode, DEFAULT_EVOLUTION_TIME};
use serde::Serialize;

/// Every accepted key, with the flag that sets it.
pub const KEYS: &[(&str, &str, &str)] = &[
    (
        "experiment",
        "experiment",
        "experiment to run when no subcommand names one",
    ),
    ("mode", "mode", "world: ER or EPR"),
    ("q_dim", "q-dim", "channel qubits in the EPR environment"),
    ("qbar_dim", "qbar-dim", "non-channel environment qubits"),
    ("lambda", "lambda", "channel/environment coupling strength"),
    (
        "lambda_grid",
        "lambda-grid",
        "comma-separated ascending couplings for sweeps",
    ),
    (
        "evolution_time",
        "evolution-time",
        "environment evolution time",
    ),
    ("trials", "trials", "sampled trials"),
    ("seed", "seed", "master seed (required)"),
    ("out", "out", "payload output path"),
    ("format", "format", "payload format: columnar or structured"),
    (
        "script",
        "script",
        "bundled script name or path to a script file",
    ),
    ("threads", "threads", "worker threads (default: all cores)"),
    ("exact", "exact", "compute exactly instead of sampling"),
    ("offset", "offset", "Bob's frame rotation in radians"),
    (
        "q_dims",
        "q-dims",
        "comma-separated channel sizes to compare",
    ),
    (
        "transcript",
        "transcript",
        "per-trial transcript output path",
    ),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.key.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "config key '{}': {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Columnar,
    Structured,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: String,
    pub mode: WorldMode,
    pub q_dim: usize,
    pub qbar_dim: usize,
    pub lambda: f64,
    pub lambda_grid: Vec<f64>,
    pub evolution_time: f64,
    pub trials: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub script: String,
    /// Worker count; not part of the result, so left out of the echo.
    #[serde(skip)]
    pub threads: Option<usize>,
    pub exact: bool,
    pub offset: f64,
    pub q_dims: Vec<usize>,
    pub transcript: Option<PathBuf>,
}

/// Raw `key → value` pairs as read from a file or flags.
pub type RawConfig = BTreeMap<String, String>;

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _, _)| *k == key)
}

pub fn parse_config_text(text: &str) -> Result<RawConfig, ConfigError> {
    let mut raw = RawConfig::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err("", format!("line {}: expected 'key = value'", n + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !known(key) {
            return Err(err(key, format!("unknown key (line {})", n + 1)));
        }
        if raw.insert(key.to_string(), value.to_string()).is_some() {
            return Err(err(key, format!("given twice (line {})", n + 1)));
        }
    }
    Ok(raw)
}

pub fn read_config_file(path: &Path) -> Result<RawConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| err("config", format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text)
}

fn scalar<T: FromStr>(raw: &RawConfig, key: &str, default: T) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    match raw.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|e| err(key, format!("cannot parse '{v}': {e}"))),
    }
}

fn list<T: FromStr>(raw: &RawConfig, key: &str, default: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    let text = raw.get(key).map_or(default, String::as_str);
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse()
                .map_err(|e| err(key, format!("cannot parse '{s}': {e}")))
        })
        .collect()
}

fn non_negative(key: &str, x: f64) -> Result<f64, ConfigError> {
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(err(
            key,
            format!("must be finite and non-negative, got {x}"),
        ))
    }
}

impl RunConfig {
    /// Validates merged raw values; `experiment` must be set by now.
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        for key in raw.keys() {
            if !known(key) {
                return Err(err(key, "unknown key"));
            }
        }
        let experiment = raw.get("experiment").cloned().ok_or_else(|| {
            err(
                "experiment",
                "missing; name one as a subcommand or in the config",
            )
        })?;
        let seed = raw
            .get("seed")
            .ok_or_else(|| err("seed", "missing required key"))?
            .parse()
            .map_err(|e| err("seed", format!("{e}")))?;
        let mode = match raw.get("mode").map_or("EPR", String::as_str) {
            m if m.eq_ignore_ascii_case("er") => WorldMode::Er,
            m if m.eq_ignore_ascii_case("epr") => WorldMode::Epr,
            m => return Err(err("mode", format!("expected ER or EPR, got '{m}'"))),
        };
        let format = match raw.get("format").map_or("structured", String::as_str) {
            "columnar" => Format::Columnar,
            "structured" => Format::Structured,
            f => {
                return Err(err(
                    "format",
                    format!("expected columnar or structured, got '{f}'"),
                ))
            }
        };
        let lambda = non_negative("lambda", scalar(raw, "lambda", 0.0)?)?;
        let lambda_grid: Vec<f64> = list(raw, "lambda_grid", "0,0.3,0.6,0.9")?;
        for &x in &lambda_grid {
            non_negative("lambda_grid", x)?;
        }
        if lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(err("lambda_grid", "must be strictly ascending"));
        }
        let evolution_time = scalar(raw, "evolution_time", DEFAULT_EVOLUTION_TIME)?;
        if !(evolution_time.is_finite() && evolution_time > 0.0) {
            return Err(err("evolution_time", "must be positive"));
        }
        let trials = scalar(raw, "trials", 10_000u64)?;
        if trials == 0 {
            return Err(err("trials", "must be at least 1"));
        }
        let threads = match raw.get("threads") {
            None => None,
            Some(_) => Some(scalar(raw, "threads", 0usize)?),
        };
        if threads == Some(0) {
            return Err(err("threads", "must be at least 1"));
        }
        let offset: f64 = scalar(raw, "offset", std::f64::consts::FRAC_PI_4)?;
        if !offset.is_finite() {
            return Err(err("offset", "must be finite"));
        }
        let cfg = Self {
            experiment,
            mode,
            q_dim: scalar(raw, "q_dim", 2)?,
            qbar_dim: scalar(raw, "qbar_dim", 1)?,
            lambda,
            lambda_grid,
            evolution_time,
            trials,
            seed,
            out: raw.get("out").map(PathBuf::from),
            format,
            script: raw.get("script").cloned().unwrap_or_else(|| "chsh".into()),
            threads,
            exact: scalar(raw, "exact", false)?,
            offset,
            q_dims: list(raw, "q_dims", "2,3")?,
            transcript: raw.get("transcript").map(PathBuf::from),
        };
        if cfg.q_dim < 2 {
            return Err(err("q_dim", "must be at least 2"));
        }
        if cfg.qbar_dim < 1 {
            return Err(err("qbar_dim", "must be at least 1"));
        }
        Ok(cfg)
    }

    pub fn epr_params(&self) -> EprParams {
        EprParams {
            q_dim: self.q_dim,
            qbar_dim: self.qbar_dim,
            lambda: self.lambda,
            seed: self.seed,
            evolution_time: self.evolution_time,
        }
    }

    /// The world selected by `mode`.
    pub fn world(&self) -> erepr::Result<World> {
        match self.mode {
            WorldMode::Er => Ok(build_er_world()),
            WorldMode::Epr => self.epr_params().build(),
        }
    }

    /// Rejects environments above the dimension cap whatever the mode.
    pub fn check_capacity(&self) -> erepr::Result<()> {
        let widest = self
            .q_dims
            .iter()
            .copied()
            .chain([self.q_dim])
            .max()
            .unwrap_or(0);
        let qubits = (2 + widest + self.qbar_dim) as u32;
        let requested = 1u128
            .checked_shl(qubits)
            .filter(|_| qubits < 128)
            .unwrap_or(u128::MAX);
        if requested > MAX_DIMENSION as u128 {
            return Err(erepr::Error::Capacity {
                requested,
                limit: MAX_DIMENSION,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(text: &str) -> RawConfig {
        parse_config_text(text).unwrap()
    }

    #[test]
    fn minimal_chsh_config() {
        let cfg = RunConfig::from_raw(&raw(
            "experiment = chsh\nmode=ER\ntrials=1000\nseed=1 # note",
        ))
        .unwrap();
        assert_eq!(cfg.mode, WorldMode::Er);
        assert_eq!(cfg.trials, 1000);
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.format, Format::Structured);
    }

    #[test]
    fn negative_lambda_names_key() {
        let e = RunConfig::from_raw(&raw("experiment=chsh\nseed=1\nlambda=-0.5")).unwrap_err();
        assert_eq!(e.key, "lambda");
    }

    #[test]
    fn errors_name_keys() {
        assert_eq!(parse_config_text("colour = red").unwrap_err().key, "colour");
        assert_eq!(parse_config_text("seed=1\nseed=2").unwrap_err().key, "seed");
        assert!(parse_config_text("just words").is_err());
        assert_eq!(
            RunConfig::from_raw(&raw("experiment=chsh"))
                .unwrap_err()
                .key,
            "seed"
        );
        assert_eq!(
            RunConfig::from_raw(&raw("experiment=chsh\nseed=x"))
                .unwrap_err()
                .key,
            "seed"
        );
        assert_eq!(
            RunConfig::from_raw(&raw("experiment=chsh\nseed=1\ntrials=0"))
                .unwrap_err()
                .key,
            "trials"
        );
        assert_eq!(
            RunConfig::from_raw(&raw("experiment=chsh\nseed=1\nformat=xml"))
                .unwrap_err()
                .key,
            "format"
        );
        assert_eq!(
            RunConfig::from_raw(&raw("experiment=chsh\nseed=1\nlambda_grid=0,0.5,0.2"))
                .unwrap_err()
                .key,
            "lambda_grid"
        );
        assert_eq!(
            RunConfig::from_raw(&raw("experiment=chsh\nseed=1\nq_dim=1"))
                .unwrap_err()
                .key,
            "q_dim"
        );
    }

    #[test]
    fn capacity_is_checked_in_either_mode() {
        let cfg = RunConfig::from_raw(&raw(
            "experiment=chsh\nseed=1\nmode=ER\nq_dim=8\nqbar_dim=8",
        ))
        .unwrap();
        assert!(matches!(
            cfg.check_capacity(),
            Err(erepr::Error::Capacity { .. })
        ));
    }
}
