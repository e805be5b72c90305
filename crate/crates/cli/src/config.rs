//! Run configuration files: one `key = value` per line, `#` comments.
//! Angles are degrees here and radians everywhere else.

use std::path::{Path, PathBuf};

use dronecov_core::analysis::DEFAULT_GRID_SIZE;
use dronecov_core::{
    EnvironmentParams, EnvironmentSet, NestedStrategy, QuadratureSpec, SystemConfig,
};

use crate::error::{CliError, CliResult};

pub const CONFIG_KEYS: [&str; 13] = [
    "pt_db",
    "n0_db",
    "lambda",
    "h",
    "phi_a",
    "t_db",
    "f",
    "rel_tol",
    "abs_tol",
    "max_subdivisions",
    "inner_tol_ratio",
    "grid_size",
    "env",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub cfg: SystemConfig,
    pub quad: QuadratureSpec,
    /// Interference profile resolution.
    pub grid_size: usize,
    pub env_name: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cfg: SystemConfig::default(),
            quad: QuadratureSpec::default(),
            grid_size: DEFAULT_GRID_SIZE,
            env_name: "urban".to_string(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::input(format!("config: {}", e.message())))?;
        let mut run = RunConfig::default();
        for (key, value) in &table {
            let raw = match value {
                toml::Value::String(s) => s.clone(),
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(x) => x.to_string(),
                other => {
                    return Err(CliError::input(format!(
                        "invalid `{key}`: expected a number or string, got {}",
                        other.type_str()
                    )))
                }
            };
            run.set(key, &raw)?;
        }
        Ok(run)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, raw: &str) -> CliResult<()> {
        let raw = raw.trim();
        if key == "env" {
            self.env_name = raw.to_string();
            return Ok(());
        }
        let number = |raw: &str| {
            raw.parse::<f64>()
                .map_err(|_| CliError::input(format!("invalid `{key}`: `{raw}` is not a number")))
        };
        let count = |raw: &str| {
            raw.parse::<usize>().map_err(|_| {
                CliError::input(format!(
                    "invalid `{key}`: `{raw}` is not a positive integer"
                ))
            })
        };
        match key {
            "pt_db" => self.cfg.pt_db = number(raw)?,
            "n0_db" => self.cfg.n0_db = number(raw)?,
            "lambda" => self.cfg.lambda = number(raw)?,
            "h" => self.cfg.h = number(raw)?,
            "phi_a" => self.cfg.phi_a = number(raw)?.to_radians(),
            "t_db" => self.cfg.t_db = number(raw)?,
            "f" => self.cfg.f = number(raw)?,
            "rel_tol" => self.quad.rel_tol = number(raw)?,
            "abs_tol" => self.quad.abs_tol = number(raw)?,
            "max_subdivisions" => self.quad.max_subdivisions = count(raw)?,
            "inner_tol_ratio" => self.quad.inner_tol_ratio = number(raw)?,
            "grid_size" => self.grid_size = count(raw)?,
            _ => {
                return Err(CliError::input(format!(
                    "unknown config key `{key}` (expected one of {})",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses a `key=value` command-line override.
    pub fn apply_override(&mut self, spec: &str) -> CliResult<()> {
        let (key, value) = spec.split_once('=').ok_or_else(|| {
            CliError::input(format!("override `{spec}` is not of the form key=value"))
        })?;
        self.set(key.trim(), value)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.cfg.validate()?;
        self.quad.validate()?;
        if self.grid_size < 16 {
            return Err(CliError::input("invalid `grid_size`: must be >= 16"));
        }
        Ok(())
    }

    pub fn strategy(&self, exact_nested: bool) -> NestedStrategy {
        if exact_nested {
            NestedStrategy::Exact
        } else {
            NestedStrategy::Profile {
                grid_size: self.grid_size,
            }
        }
    }
}

/// Where environment parameters come from.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvSource {
    Builtin,
    File(PathBuf),
}

impl EnvSource {
    /// `--env` takes an environment name or the path of a parameter file.
    /// Returns the source and, for names, the selected environment.
    pub fn from_flag(flag: Option<&str>) -> (Self, Option<String>) {
        match flag {
            None => (EnvSource::Builtin, None),
            Some(v) if Path::new(v).is_file() => (EnvSource::File(PathBuf::from(v)), None),
            Some(name) => (EnvSource::Builtin, Some(name.to_string())),
        }
    }

    pub fn load(&self) -> CliResult<EnvironmentSet> {
        match self {
            EnvSource::Builtin => Ok(EnvironmentSet::builtin()),
            EnvSource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                EnvironmentSet::parse(&text)
                    .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
            }
        }
    }

    pub fn resolve(&self, name: &str) -> CliResult<EnvironmentParams> {
        Ok(self.load()?.lookup(name)?.clone())
    }
}
