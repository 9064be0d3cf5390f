//! Experiment runner behind the `whlab` binary.

pub mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use whlab_core::factor::{ladder_law, verify_factorization, Side};
use whlab_core::montecarlo::{compare_empirical, sample_ladder};
use whlab_core::reconstruct::{auto_reconstruct_with, DetectedClass, Detector, ReconstructionReport};
use whlab_core::{LatticeDist, TruncatedData};

pub use config::{Command, ConfigError, ExperimentConfig, LoadedConfig};

pub const EXIT_OK: i32 = 0;
/// A residual, TV or z-score check failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// The config could not be parsed, validated or executed.
pub const EXIT_CONFIG: i32 = 2;
/// No reconstruction class was detected.
pub const EXIT_NOT_DETECTED: i32 = 3;

pub const DEFAULT_OUT: &str = "whlab-out";

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Sizes the global rayon pool from `WHLAB_THREADS` when set.
pub fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("WHLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("WHLAB_THREADS={raw:?} is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

/// TV tolerance used by `roundtrip` when the config gives none.
pub fn class_tolerance(class: DetectedClass) -> f64 {
    match class {
        DetectedClass::Triangular | DetectedClass::SkipFree => 1e-10,
        DetectedClass::Exponential => 1e-6,
        DetectedClass::DiscreteCm | DetectedClass::Correlation | DetectedClass::None => 1e-4,
    }
}

/// Runs one command, writes its reports and returns the exit code.
pub fn run(inv: &Invocation) -> i32 {
    match execute(inv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            EXIT_CONFIG
        }
    }
}

fn execute(inv: &Invocation) -> Result<i32, ConfigError> {
    let mut loaded = LoadedConfig::load(&inv.config)?;
    if let Some(c) = loaded.config.command {
        if c != inv.command {
            return Err(loaded.error_at(
                "command",
                format!("config is for `{}`, not `{}`", c.name(), inv.command.name()),
            ));
        }
    }
    if let Some(seed) = inv.seed {
        loaded.config.seed = seed;
    }
    let out_dir = inv
        .out
        .clone()
        .or_else(|| loaded.config.out.as_ref().map(|p| loaded.base_dir().join(p)))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let out = Outputs::create(&out_dir, inv.command, &loaded)?;
    match inv.command {
        Command::Factorize => factorize(&loaded, &out, false),
        Command::Verify => factorize(&loaded, &out, true),
        Command::Reconstruct => reconstruct(&loaded, &out),
        Command::Roundtrip => roundtrip(&loaded, &out),
        Command::Simulate => simulate(&loaded, &out),
    }
}

/// Report writer. CSV files open with a `#` header line that carries the
/// timestamp; JSON reports hold no timestamp, so their bytes depend on the
/// config and seed alone.
struct Outputs {
    dir: PathBuf,
    header: String,
    command: Command,
    config_sha256: String,
    seed: u64,
    config_path: PathBuf,
}

impl Outputs {
    fn create(dir: &Path, command: Command, loaded: &LoadedConfig) -> Result<Self, ConfigError> {
        fs::create_dir_all(dir).map_err(|e| loaded.error_at("out", format!("cannot create {}: {e}", dir.display())))?;
        let ts = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Ok(Self {
            dir: dir.to_path_buf(),
            header: format!(
                "# whlab {} config_sha256={} seed={} timestamp={ts}",
                command.name(),
                loaded.sha256,
                loaded.config.seed
            ),
            command,
            config_sha256: loaded.sha256.clone(),
            seed: loaded.config.seed,
            config_path: loaded.path.clone(),
        })
    }

    fn io_error(&self, name: &str, e: impl std::fmt::Display) -> ConfigError {
        ConfigError {
            path: self.config_path.clone(),
            line: 0,
            column: 0,
            message: format!("cannot write {}: {e}", self.dir.join(name).display()),
        }
    }

    fn csv(&self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), ConfigError> {
        let mut buf = Vec::new();
        writeln!(buf, "{}", self.header).map_err(|e| self.io_error(name, e))?;
        body(&mut buf).map_err(|e| self.io_error(name, e))?;
        fs::write(self.dir.join(name), buf).map_err(|e| self.io_error(name, e))
    }

    /// Writes `report.json` with provenance fields merged in.
    fn report(&self, fields: Value) -> Result<(), ConfigError> {
        let mut doc = json!({
            "command": self.command.name(),
            "config_sha256": self.config_sha256,
            "seed": self.seed,
        });
        if let (Value::Object(d), Value::Object(f)) = (&mut doc, fields) {
            d.extend(f);
        }
        let mut body = serde_json::to_vec_pretty(&doc).map_err(|e| self.io_error("report.json", e))?;
        body.push(b'\n');
        fs::write(self.dir.join("report.json"), body).map_err(|e| self.io_error("report.json", e))?;
        println!("{}", self.header);
        println!("{}", String::from_utf8_lossy(&serde_json::to_vec(&doc).unwrap_or_default()));
        Ok(())
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn core_error(loaded: &LoadedConfig, key: &str, e: whlab_core::Error) -> ConfigError {
    loaded.error_at(key, e.to_string())
}

fn factorize(loaded: &LoadedConfig, out: &Outputs, check: bool) -> Result<i32, ConfigError> {
    let cfg = &loaded.config;
    let mu = loaded.distribution()?;
    let t = cfg.grid.t_values();
    let report =
        verify_factorization(&mu, &cfg.grid.s, &t, cfg.horizon).map_err(|e| core_error(loaded, "distribution", e))?;
    out.csv("factorization.csv", |w| report.write_csv(w))?;
    if !check {
        let mut tables = Vec::new();
        for side in [Side::Upward, Side::Downward] {
            tables.push((side, ladder_law(&mu, side, cfg.horizon).map_err(|e| core_error(loaded, "horizon", e))?));
        }
        out.csv("ladder.csv", |w| {
            writeln!(w, "side,n,k,mass")?;
            for (side, law) in &tables {
                let name = match side {
                    Side::Upward => "upward",
                    Side::Downward => "downward",
                };
                for (n, k, m) in law.cells() {
                    writeln!(w, "{name},{n},{k},{m:.16e}")?;
                }
            }
            Ok(())
        })?;
    }
    let holds = report.holds(cfg.tolerances.residual_slack);
    out.report(json!({
        "horizon": cfg.horizon,
        "grid_points": report.rows.len(),
        "max_residual": report.max_residual(),
        "max_excess_over_bound": report.max_excess(),
        "residual_slack": cfg.tolerances.residual_slack,
        "holds": holds,
    }))?;
    Ok(if check && !holds { EXIT_CHECK_FAILED } else { EXIT_OK })
}

fn detectors(cfg: &ExperimentConfig) -> Vec<Detector> {
    cfg.detectors.clone().unwrap_or_else(|| Detector::ALL.to_vec())
}

fn reconstruction_fields(report: &ReconstructionReport) -> Value {
    let mut v = to_value(report);
    if let (Value::Object(m), Some(tv)) = (&mut v, report.tv_distance()) {
        m.insert("tv_distance".into(), json!(tv));
    }
    v
}

fn reconstruct(loaded: &LoadedConfig, out: &Outputs) -> Result<i32, ConfigError> {
    let cfg = &loaded.config;
    let truth = match &cfg.distribution {
        Some(_) => Some(loaded.distribution()?),
        None => None,
    };
    let data = match (&cfg.data_dir, &truth) {
        (Some(dir), _) => TruncatedData::read_dir(&loaded.base_dir().join(dir))
            .map_err(|e| loaded.error_at("data_dir", format!("cannot read data: {e}")))?,
        (None, Some(mu)) => forward(loaded, mu)?,
        (None, None) => return Err(loaded.error_at("command", "reconstruct needs data_dir or distribution")),
    };
    let mut report = auto_reconstruct_with(&data, &detectors(cfg));
    if let Some(mu) = &truth {
        report = report.with_truth(mu);
    }
    out.report(reconstruction_fields(&report))?;
    Ok(if report.detected() { EXIT_OK } else { EXIT_NOT_DETECTED })
}

fn forward(loaded: &LoadedConfig, mu: &LatticeDist) -> Result<TruncatedData, ConfigError> {
    TruncatedData::from_distribution(mu, loaded.config.horizon).map_err(|e| core_error(loaded, "distribution", e))
}

fn roundtrip(loaded: &LoadedConfig, out: &Outputs) -> Result<i32, ConfigError> {
    let cfg = &loaded.config;
    let mu = loaded.distribution()?;
    let data_dir = out.dir.join("data");
    forward(loaded, &mu)?
        .write_dir(&data_dir)
        .map_err(|e| out.io_error("data", e))?;
    let data = TruncatedData::read_dir(&data_dir).map_err(|e| out.io_error("data", e))?;
    let report = auto_reconstruct_with(&data, &detectors(cfg)).with_truth(&mu);
    let tolerance = cfg.tolerances.tv.unwrap_or(class_tolerance(report.detected_class));
    let tv = report.tv_distance();
    let within = tv.is_some_and(|tv| tv <= tolerance);
    let mut fields = reconstruction_fields(&report);
    if let Value::Object(m) = &mut fields {
        m.insert("tv_tolerance".into(), json!(tolerance));
        m.insert("within_tolerance".into(), json!(within));
    }
    out.report(fields)?;
    Ok(if !report.detected() {
        EXIT_NOT_DETECTED
    } else if within {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn simulate(loaded: &LoadedConfig, out: &Outputs) -> Result<i32, ConfigError> {
    let cfg = &loaded.config;
    let mu = loaded.distribution()?;
    let sim = &cfg.simulation;
    let emp = sample_ladder(&mu, cfg.side, sim.samples, sim.max_steps, cfg.seed)
        .map_err(|e| core_error(loaded, "distribution", e))?;
    let exact = ladder_law(&mu, cfg.side, sim.max_steps).map_err(|e| core_error(loaded, "max_steps", e))?;
    let cmp = compare_empirical(&exact, &emp).map_err(|e| core_error(loaded, "samples", e))?;
    let z = cfg.tolerances.z_limit;
    let pass = cmp.max_abs_z <= z && cmp.censored_z.is_none_or(|c| c.abs() <= z);
    out.csv("comparison.csv", |w| cmp.write_csv(w))?;
    out.report(json!({
        "side": cfg.side,
        "samples": sim.samples,
        "max_steps": sim.max_steps,
        "censored_count": emp.censored_count,
        "exact_alive_mass": exact.alive_after(sim.max_steps),
        "scored_cells": cmp.rows.len(),
        "max_abs_z": cmp.max_abs_z,
        "censored_z": cmp.censored_z,
        "z_limit": z,
        "pass": pass,
    }))?;
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}
