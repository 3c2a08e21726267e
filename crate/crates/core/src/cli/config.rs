//! `key = value` configuration files and option resolution.
//!
//! Precedence is command-line flag, then config file, then built-in default.

use std::path::Path;

use thiserror::Error;

use crate::bench::BenchFunction;
use crate::optim::{GdConfig, GdMode, StopCriteria, WolfeConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {message}")]
    BadValue {
        line: usize,
        key: String,
        message: String,
    },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Gd,
    Bfgs,
}

impl OptimizerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OptimizerKind::Gd => "gd",
            OptimizerKind::Bfgs => "bfgs",
        }
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gd" => Ok(OptimizerKind::Gd),
            "bfgs" => Ok(OptimizerKind::Bfgs),
            other => Err(format!("unknown optimizer `{other}` (expected gd|bfgs)")),
        }
    }
}

/// Keys written to manifests for information only; accepted and ignored
/// when a manifest is fed back as a config file.
const INFORMATIONAL_KEYS: &[&str] = &["tool_version", "subcommand", "artifacts"];

/// A partially specified option set. `None` means "not given here".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub function: Option<BenchFunction>,
    pub optimizer: Option<OptimizerKind>,
    pub hidden: Option<usize>,
    pub samples: Option<usize>,
    pub train_fraction: Option<f64>,
    pub seed: Option<u64>,
    pub eta: Option<f64>,
    pub epochs: Option<usize>,
    pub gd_mode: Option<GdMode>,
    pub max_iters: Option<usize>,
    pub grad_tol: Option<f64>,
    pub f_tol: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub alpha_init: Option<f64>,
    pub alpha_max: Option<f64>,
    pub max_bracket_steps: Option<usize>,
    pub max_zoom_steps: Option<usize>,
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        line,
        key: key.to_string(),
        message: e.to_string(),
    })
}

impl Overrides {
    /// Sets `key` from its textual value. Returns `Ok(false)` for unknown keys.
    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<bool, ConfigError> {
        macro_rules! field {
            ($f:ident) => {{
                if self.$f.is_some() {
                    return Err(ConfigError::Duplicate {
                        line,
                        key: key.to_string(),
                    });
                }
                self.$f = Some(parse_value(line, key, value)?);
            }};
        }
        match key {
            "function" => field!(function),
            "optimizer" => field!(optimizer),
            "hidden" => field!(hidden),
            "samples" => field!(samples),
            "train_fraction" => field!(train_fraction),
            "seed" => field!(seed),
            "eta" => field!(eta),
            "epochs" => field!(epochs),
            "gd_mode" => field!(gd_mode),
            "max_iters" => field!(max_iters),
            "grad_tol" => field!(grad_tol),
            "f_tol" => field!(f_tol),
            "c1" => field!(c1),
            "c2" => field!(c2),
            "alpha_init" => field!(alpha_init),
            "alpha_max" => field!(alpha_max),
            "max_bracket_steps" => field!(max_bracket_steps),
            "max_zoom_steps" => field!(max_zoom_steps),
            k if INFORMATIONAL_KEYS.contains(&k) => {}
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Fills every unset field from `fallback`.
    pub fn or(self, fallback: Overrides) -> Overrides {
        Overrides {
            function: self.function.or(fallback.function),
            optimizer: self.optimizer.or(fallback.optimizer),
            hidden: self.hidden.or(fallback.hidden),
            samples: self.samples.or(fallback.samples),
            train_fraction: self.train_fraction.or(fallback.train_fraction),
            seed: self.seed.or(fallback.seed),
            eta: self.eta.or(fallback.eta),
            epochs: self.epochs.or(fallback.epochs),
            gd_mode: self.gd_mode.or(fallback.gd_mode),
            max_iters: self.max_iters.or(fallback.max_iters),
            grad_tol: self.grad_tol.or(fallback.grad_tol),
            f_tol: self.f_tol.or(fallback.f_tol),
            c1: self.c1.or(fallback.c1),
            c2: self.c2.or(fallback.c2),
            alpha_init: self.alpha_init.or(fallback.alpha_init),
            alpha_max: self.alpha_max.or(fallback.alpha_max),
            max_bracket_steps: self.max_bracket_steps.or(fallback.max_bracket_steps),
            max_zoom_steps: self.max_zoom_steps.or(fallback.max_zoom_steps),
        }
    }
}

/// Parses config text. Blank lines and `#` comments (whole-line or
/// trailing) are ignored.
pub fn parse_config_str(text: &str) -> Result<Overrides, ConfigError> {
    let mut out = Overrides::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Malformed {
                line,
                text: raw.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Malformed {
                line,
                text: raw.to_string(),
            });
        }
        if !out.set(line, key, value)? {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
    }
    Ok(out)
}

pub fn parse_config(path: &Path) -> Result<Overrides, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

/// Fully resolved option set; every default is explicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub function: Option<BenchFunction>,
    pub optimizer: OptimizerKind,
    pub hidden: usize,
    pub samples: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub gd: GdConfig,
    pub stop: StopCriteria,
    pub wolfe: WolfeConfig,
}

impl Settings {
    pub fn resolve(o: &Overrides) -> Settings {
        let gd = GdConfig::default();
        let stop = StopCriteria::default();
        let wolfe = WolfeConfig::default();
        Settings {
            function: o.function,
            optimizer: o.optimizer.unwrap_or(OptimizerKind::Bfgs),
            hidden: o.hidden.unwrap_or(10),
            samples: o.samples.unwrap_or(500),
            train_fraction: o.train_fraction.unwrap_or(0.8),
            seed: o.seed.unwrap_or(42),
            gd: GdConfig {
                eta: o.eta.unwrap_or(gd.eta),
                epochs: o.epochs.unwrap_or(gd.epochs),
                mode: o.gd_mode.unwrap_or(gd.mode),
            },
            stop: StopCriteria {
                grad_tol: o.grad_tol.unwrap_or(stop.grad_tol),
                max_iters: o.max_iters.unwrap_or(stop.max_iters),
                f_tol: o.f_tol.unwrap_or(stop.f_tol),
            },
            wolfe: WolfeConfig {
                c1: o.c1.unwrap_or(wolfe.c1),
                c2: o.c2.unwrap_or(wolfe.c2),
                alpha_init: o.alpha_init.unwrap_or(wolfe.alpha_init),
                alpha_max: o.alpha_max.unwrap_or(wolfe.alpha_max),
                max_bracket_steps: o.max_bracket_steps.unwrap_or(wolfe.max_bracket_steps),
                max_zoom_steps: o.max_zoom_steps.unwrap_or(wolfe.max_zoom_steps),
            },
        }
    }

    /// `key = value` pairs for the manifest, in a fixed order. The
    /// optimizer key is omitted when `include_optimizer` is false.
    pub fn manifest_pairs(&self, include_optimizer: bool) -> Vec<(&'static str, String)> {
        let mut pairs = Vec::new();
        if let Some(f) = self.function {
            pairs.push(("function", f.name().to_string()));
        }
        if include_optimizer {
            pairs.push(("optimizer", self.optimizer.as_str().to_string()));
        }
        pairs.extend([
            ("hidden", self.hidden.to_string()),
            ("samples", self.samples.to_string()),
            ("train_fraction", self.train_fraction.to_string()),
            ("seed", self.seed.to_string()),
            ("eta", self.gd.eta.to_string()),
            ("epochs", self.gd.epochs.to_string()),
            ("gd_mode", self.gd.mode.as_str().to_string()),
            ("max_iters", self.stop.max_iters.to_string()),
            ("grad_tol", self.stop.grad_tol.to_string()),
            ("f_tol", self.stop.f_tol.to_string()),
            ("c1", self.wolfe.c1.to_string()),
            ("c2", self.wolfe.c2.to_string()),
            ("alpha_init", self.wolfe.alpha_init.to_string()),
            ("alpha_max", self.wolfe.alpha_max.to_string()),
            ("max_bracket_steps", self.wolfe.max_bracket_steps.to_string()),
            ("max_zoom_steps", self.wolfe.max_zoom_steps.to_string()),
        ]);
        pairs
    }
}
