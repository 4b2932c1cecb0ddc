use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use spdc_cli::error::CliError;

fn shipped_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("paper.json")
}

fn spdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spdc")).args(args).output().unwrap()
}

fn code(o: &Output) -> u8 {
    o.status.code().unwrap() as u8
}

fn edited(dir: &Path, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(shipped_config()).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.join("edited.json");
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    path
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&spdc(&["--help"])), 0);
    assert_eq!(code(&spdc(&["--version"])), 0);
}

#[test]
fn bad_arguments_are_usage_errors() {
    let cfg = shipped_config();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(code(&spdc(&[])), CliError::EXIT_USAGE);
    assert_eq!(code(&spdc(&["no-such-command", cfg])), CliError::EXIT_USAGE);
    assert_eq!(code(&spdc(&["epmf-grid", cfg, "--grid", "12by12"])), CliError::EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = spdc(&["simulate", cfg, "--polarizer", "diagonal", "--out", out]);
    assert_eq!(code(&o), CliError::EXIT_USAGE);
    assert!(String::from_utf8_lossy(&o.stderr).contains("polarizer"));
    assert_eq!(code(&spdc(&["epmf-grid", cfg, "--grid", "4x4", "--out", out])), CliError::EXIT_USAGE);
}

#[test]
fn invalid_configuration_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited(dir.path(), |v| v["detectors"][1]["efficiency"] = 1.5.into());
    let o = spdc(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), CliError::EXIT_VALIDATION);
    assert!(String::from_utf8_lossy(&o.stderr).contains("detectors[1]"));

    let cfg = edited(dir.path(), |v| v["crystal"]["colour"] = "blue".into());
    let o = spdc(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), CliError::EXIT_VALIDATION);
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn missing_files_are_io_errors() {
    assert_eq!(code(&spdc(&["degeneracy", "/nonexistent/config.json"])), CliError::EXIT_IO);
    let dir = tempfile::tempdir().unwrap();
    let o = spdc(&[
        "histogram",
        shipped_config().to_str().unwrap(),
        "--input",
        dir.path().join("absent.csv").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), CliError::EXIT_IO);
}

#[test]
fn unreachable_phase_matching_is_a_solver_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited(dir.path(), |v| {
        v["analysis"]["tuning"]["theta_min_deg"] = 40.0.into();
        v["analysis"]["tuning"]["theta_max_deg"] = 44.0.into();
    });
    let o = spdc(&["tuning-curve", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), CliError::EXIT_SOLVER);
}

#[test]
fn validate_prints_the_canonical_form() {
    let o = spdc(&["validate", shipped_config().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), std::fs::read_to_string(shipped_config()).unwrap());
}

#[test]
fn pipeline_writes_outputs_and_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, out) = (shipped_config(), dir.path());
    let run = |args: &[&str]| {
        let mut all = vec![args[0], cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        all.extend_from_slice(&args[1..]);
        let o = spdc(&all);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    };
    assert!(run(&["degeneracy"]).contains("degeneracy angle: 29.76"));
    run(&["simulate", "--duration", "5", "--seed", "99"]);
    run(&["histogram"]);
    run(&["calibrate"]);
    run(&["reconstruct"]);
    let spectrum = std::fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert!(spectrum.starts_with("lambda_s_nm,lambda_i_nm,density\n"));
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("simulate.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 99);
    assert_eq!(manifest["config"]["seed"], 99);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["outputs"][0].as_str().unwrap().ends_with("timetags.csv"));
}

#[test]
fn json_tables_round_trip_through_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, out) = (shipped_config(), dir.path().to_str().unwrap());
    let cfg = cfg.to_str().unwrap();
    let base = ["--out", out, "--format", "json"];
    let args = |cmd: &'static str, extra: &[&'static str]| {
        let mut v = vec![cmd, cfg];
        v.extend_from_slice(&base);
        v.extend_from_slice(extra);
        v
    };
    assert_eq!(code(&spdc(&args("simulate", &["--duration", "2"]))), 0);
    assert_eq!(code(&spdc(&args("histogram", &["--bin-width", "312", "--window", "-2000:90000"]))), 0);
    let h: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("histogram.json")).unwrap()).unwrap();
    let rows = h.as_array().unwrap();
    assert_eq!(rows[1]["bin_start_ps"].as_i64().unwrap() - rows[0]["bin_start_ps"].as_i64().unwrap(), 312);
    assert!(rows.iter().map(|r| r["count"].as_u64().unwrap()).sum::<u64>() > 0);
}

#[test]
fn polarizer_halves_the_trigger_rate() {
    let dir = tempfile::tempdir().unwrap();
    let triggers = |pol: &str| {
        let out = dir.path().join(pol);
        let o = spdc(&[
            "simulate",
            shipped_config().to_str().unwrap(),
            "--duration",
            "2",
            "--polarizer",
            pol,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        std::fs::read_to_string(out.join("timetags.csv"))
            .unwrap()
            .lines()
            .filter(|l| l.starts_with("trigger"))
            .count() as f64
    };
    let (all, e, o) = (triggers("none"), triggers("e"), triggers("o"));
    for part in [e, o] {
        let ratio = part / all;
        assert!((ratio - 0.5).abs() < 0.01, "{ratio}");
    }
}
