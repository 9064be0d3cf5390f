use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn whlab(dir: &Path, cmd: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_whlab"))
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .env("WHLAB_THREADS", "2")
        .output()
        .unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("out/report.json")).unwrap()).unwrap()
}

#[test]
fn verify_point_mass_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = whlab(
        dir.path(),
        "verify",
        r#"{"distribution": {"family": "point_mass", "at": 0}, "horizon": 20}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    assert_eq!(r["max_residual"], 0.0);
    assert_eq!(r["holds"], true);
    let csv = fs::read_to_string(dir.path().join("out/factorization.csv")).unwrap();
    assert!(csv.starts_with("# whlab verify config_sha256="));
    assert_eq!(csv.lines().count(), 2 + 9 * 32);
}

#[test]
fn factorize_writes_ladder_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = whlab(
        dir.path(),
        "factorize",
        r#"{"distribution": {"family": "uniform_window", "lo": -2, "hi": 2}, "horizon": 30,
            "grid": {"s": [0.5], "t_count": 4}}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let ladder = fs::read_to_string(dir.path().join("out/ladder.csv")).unwrap();
    assert!(ladder.lines().nth(1).unwrap() == "side,n,k,mass");
    assert!(ladder.lines().any(|l| l.starts_with("downward,1,-1,")));
}

#[test]
fn roundtrip_cubic_tail_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = whlab(
        dir.path(),
        "roundtrip",
        r#"{"distribution": {"family": "cubic_tail_example", "cutoff": 200}, "horizon": 6}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["detected_class"], "triangular");
    assert!(r["tv_distance"].as_f64().unwrap() <= 1e-8);
    assert!(dir.path().join("out/data/manifest.json").exists());
}

#[test]
fn exponential_alone_misses_the_cubic_tail_example() {
    let dir = tempfile::tempdir().unwrap();
    let data_cfg = r#"{"distribution": {"family": "cubic_tail_example"}, "horizon": 8}"#;
    assert_eq!(whlab(dir.path(), "roundtrip", data_cfg, &[]).status.code(), Some(0));
    let out = whlab(
        dir.path(),
        "reconstruct",
        r#"{"data_dir": "out/data", "detectors": ["exponential"]}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(report(dir.path())["detected_class"], "none");
}

#[test]
fn exponential_detects_uniform_unit_steps() {
    // Bounded steps have every exponential moment, so the exponential
    // detector applies to uniform{-1, 1}.
    let dir = tempfile::tempdir().unwrap();
    let out = whlab(
        dir.path(),
        "reconstruct",
        r#"{"distribution": {"family": "two_point", "left": -1, "right": 1, "p_left": 0.5},
            "detectors": ["exponential"]}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(dir.path())["detected_class"], "exponential");
}

#[test]
fn parse_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = whlab(dir.path(), "verify", "{\n  \"horizon\": 5,\n  \"grid\": {\"s\": [0.2,]}\n}", &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("config.json:3:"), "{err}");
}

#[test]
fn validation_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = whlab(
        dir.path(),
        "verify",
        "{\n  \"distribution\": {\"family\": \"point_mass\", \"at\": 0},\n  \"horizon\": 0\n}",
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config.json:3:"));
}

#[test]
fn command_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = whlab(
        dir.path(),
        "verify",
        r#"{"command": "simulate", "distribution": {"family": "point_mass", "at": 0}}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_passes_and_fails_on_tolerance() {
    let cfg = r#"{"distribution": {"family": "two_point", "left": -1, "right": 1, "p_left": 0.3},
                  "simulation": {"samples": 20000, "max_steps": 500}, "seed": 4}"#;
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(whlab(dir.path(), "simulate", cfg, &[]).status.code(), Some(0));
    assert_eq!(report(dir.path())["pass"], true);

    let strict = cfg.replace("\"seed\": 4", "\"seed\": 4, \"tolerances\": {\"z_limit\": 1e-9}");
    assert_eq!(whlab(dir.path(), "simulate", &strict, &[]).status.code(), Some(1));
}

#[test]
fn reports_are_deterministic() {
    let cfg = r#"{"distribution": {"family": "uniform_window", "lo": -1, "hi": 2},
                  "simulation": {"samples": 5000, "max_steps": 200}}"#;
    let body = |dir: &Path, file: &str| {
        let text = fs::read_to_string(dir.join("out").join(file)).unwrap();
        text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        assert_eq!(whlab(d, "simulate", cfg, &["--seed", "11"]).status.code(), Some(0));
    }
    for file in ["report.json", "comparison.csv"] {
        assert_eq!(body(a.path(), file), body(b.path(), file));
    }
    assert_eq!(report(a.path())["seed"], 11);

    let c = tempfile::tempdir().unwrap();
    whlab(c.path(), "simulate", cfg, &["--seed", "12"]);
    assert_ne!(body(a.path(), "comparison.csv"), body(c.path(), "comparison.csv"));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, r#"{"distribution": {"family": "point_mass", "at": 0}}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_whlab"))
        .args(["verify", "--config"])
        .arg(&cfg)
        .env("WHLAB_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
