//! Experiment configuration: one JSON document per run.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use whlab_core::data::sha256_hex;
use whlab_core::factor::Side;
use whlab_core::families;
use whlab_core::reconstruct::Detector;
use whlab_core::LatticeDist;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Factorize,
    Verify,
    Reconstruct,
    Roundtrip,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Factorize => "factorize",
            Command::Verify => "verify",
            Command::Reconstruct => "reconstruct",
            Command::Roundtrip => "roundtrip",
            Command::Simulate => "simulate",
        }
    }
}

/// A named distribution family with its parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    PointMass {
        at: i64,
    },
    TwoPoint {
        left: i64,
        right: i64,
        p_left: f64,
    },
    UniformWindow {
        lo: i64,
        hi: i64,
    },
    GeometricMixture {
        /// `(rate, weight)` pairs.
        atoms: Vec<(f64, f64)>,
        /// `(site, mass)` pairs on negative sites.
        negative: Vec<(i64, f64)>,
        #[serde(default = "default_cutoff")]
        cutoff: i64,
    },
    CubicTailExample {
        #[serde(default = "default_cutoff")]
        cutoff: i64,
    },
    /// A distribution file `{ "offset", "weights", "truncated_mass" }`,
    /// relative to the config file.
    CustomFile {
        path: PathBuf,
    },
}

fn default_cutoff() -> i64 {
    200
}

impl Generator {
    pub fn build(&self, base: &Path) -> whlab_core::Result<LatticeDist> {
        match self {
            Generator::PointMass { at } => Ok(families::point_mass(*at)),
            Generator::TwoPoint { left, right, p_left } => families::two_point(*left, *right, *p_left),
            Generator::UniformWindow { lo, hi } => families::uniform_window(*lo, *hi),
            Generator::GeometricMixture {
                atoms,
                negative,
                cutoff,
            } => families::geometric_mixture(atoms, negative, *cutoff),
            Generator::CubicTailExample { cutoff } => families::cubic_tail_example(*cutoff),
            Generator::CustomFile { path } => {
                let body = std::fs::read(base.join(path))?;
                Ok(serde_json::from_slice(&body)?)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_s")]
    pub s: Vec<f64>,
    /// Explicit `t` values; when absent, `t_count` equispaced points in `[0, 2π)`.
    #[serde(default)]
    pub t: Option<Vec<f64>>,
    #[serde(default = "default_t_count")]
    pub t_count: usize,
}

fn default_s() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

fn default_t_count() -> usize {
    32
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            s: default_s(),
            t: None,
            t_count: default_t_count(),
        }
    }
}

impl GridSpec {
    pub fn t_values(&self) -> Vec<f64> {
        match &self.t {
            Some(t) => t.clone(),
            None => (0..self.t_count)
                .map(|j| std::f64::consts::TAU * j as f64 / self.t_count as f64)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Added to the certified bound when checking factorization residuals.
    #[serde(default = "default_slack")]
    pub residual_slack: f64,
    /// Round-trip TV tolerance; defaults to the detected class's tolerance.
    #[serde(default)]
    pub tv: Option<f64>,
    /// Largest accepted `|z|` in the Monte Carlo comparison.
    #[serde(default = "default_z")]
    pub z_limit: f64,
}

fn default_slack() -> f64 {
    1e-10
}

fn default_z() -> f64 {
    whlab_core::montecarlo::Z_LIMIT
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual_slack: default_slack(),
            tv: None,
            z_limit: default_z(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Simulation {
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u32,
}

fn default_samples() -> u64 {
    100_000
}

fn default_max_steps() -> u32 {
    whlab_core::montecarlo::DEFAULT_MAX_STEPS
}

impl Default for Simulation {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            max_steps: default_max_steps(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when given.
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub distribution: Option<Generator>,
    /// A truncated-data directory, relative to the config file.
    #[serde(default)]
    pub data_dir: Option<PathBuf>,
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_side")]
    pub side: Side,
    /// Detectors to run, in dispatch order; all when absent.
    #[serde(default)]
    pub detectors: Option<Vec<Detector>>,
    #[serde(default)]
    pub simulation: Simulation,
}

fn default_horizon() -> u32 {
    200
}

fn default_side() -> Side {
    Side::Upward
}

/// A config problem pinned to a line of the source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.path.display(), self.line, self.column, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// A parsed config together with its source text and hash.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub path: PathBuf,
    pub source: String,
    pub sha256: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let source = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            line: 0,
            column: 0,
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse(path, source)
    }

    pub fn parse(path: &Path, source: String) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = serde_json::from_str(&source).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let loaded = Self {
            sha256: sha256_hex(source.as_bytes()),
            config,
            path: path.to_path_buf(),
            source,
        };
        loaded.validate()?;
        Ok(loaded)
    }

    /// Error anchored at the first line mentioning `"key"`.
    pub fn error_at(&self, key: &str, message: impl Into<String>) -> ConfigError {
        let needle = format!("\"{key}\"");
        let (line, column) = self
            .source
            .lines()
            .enumerate()
            .find_map(|(i, l)| l.find(&needle).map(|c| (i + 1, c + 1)))
            .unwrap_or((1, 1));
        ConfigError {
            path: self.path.clone(),
            line,
            column,
            message: message.into(),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.config;
        if c.horizon < 1 {
            return Err(self.error_at("horizon", "horizon must be >= 1"));
        }
        if let Some(s) = c.grid.s.iter().find(|s| s.is_nan() || s.abs() >= 1.0) {
            return Err(self.error_at("s", format!("grid value s = {s} is not inside the unit disc")));
        }
        if c.grid.s.is_empty() {
            return Err(self.error_at("s", "grid has no s values"));
        }
        if c.grid.t.as_ref().map_or(c.grid.t_count == 0, Vec::is_empty) {
            return Err(self.error_at("grid", "grid has no t values"));
        }
        if let Some(t) = c.grid.t.iter().flatten().find(|t| !t.is_finite()) {
            return Err(self.error_at("t", format!("grid value t = {t} is not finite")));
        }
        let tol = &c.tolerances;
        for (key, v) in [("residual_slack", Some(tol.residual_slack)), ("tv", tol.tv), ("z_limit", Some(tol.z_limit))] {
            if let Some(v) = v {
                if v.is_nan() || v <= 0.0 {
                    return Err(self.error_at(key, format!("tolerance {key} = {v} must be > 0")));
                }
            }
        }
        if c.simulation.samples == 0 {
            return Err(self.error_at("samples", "samples must be >= 1"));
        }
        if c.simulation.max_steps == 0 {
            return Err(self.error_at("max_steps", "max_steps must be >= 1"));
        }
        if c.detectors.as_ref().is_some_and(Vec::is_empty) {
            return Err(self.error_at("detectors", "detector list is empty"));
        }
        Ok(())
    }

    pub fn base_dir(&self) -> &Path {
        self.path.parent().unwrap_or(Path::new("."))
    }

    pub fn distribution(&self) -> Result<LatticeDist, ConfigError> {
        let generator = self
            .config
            .distribution
            .as_ref()
            .ok_or_else(|| self.error_at("distribution", "this command needs a distribution"))?;
        generator
            .build(self.base_dir())
            .map_err(|e| self.error_at("distribution", format!("cannot build distribution: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> Result<LoadedConfig, ConfigError> {
        LoadedConfig::parse(Path::new("cfg.json"), src.to_string())
    }

    #[test]
    fn defaults_fill_in() {
        let c = parse(r#"{"distribution": {"family": "point_mass", "at": 0}}"#).unwrap();
        assert_eq!(c.config.horizon, 200);
        assert_eq!(c.config.grid.t_values().len(), 32);
        assert_eq!(c.config.side, Side::Upward);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = parse("{\n  \"horizon\": 10,\n  oops\n}").unwrap_err();
        assert_eq!(e.line, 3);
    }

    #[test]
    fn validation_errors_point_at_the_key() {
        let e = parse("{\n  \"horizon\": 10,\n  \"grid\": {\n    \"s\": [0.5, 1.0]\n  }\n}").unwrap_err();
        assert_eq!(e.line, 4);
        assert!(e.to_string().starts_with("cfg.json:4:"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(parse(r#"{"horizn": 3}"#).is_err());
        assert!(parse(r#"{"distribution": {"family": "two_point", "left": -1, "right": 1, "p": 0.5}}"#).is_err());
    }

    #[test]
    fn hash_tracks_source_bytes() {
        let a = parse(r#"{"horizon": 3}"#).unwrap();
        let b = parse(r#"{"horizon":3}"#).unwrap();
        assert_ne!(a.sha256, b.sha256);
    }
}
