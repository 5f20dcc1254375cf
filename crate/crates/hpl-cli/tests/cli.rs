//! End-to-end tests against the built `hpl` binary.

use std::path::PathBuf;
use std::process::Command;

fn hpl() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hpl"));
    cmd.env("HPL_LOG", "quiet");
    cmd
}

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("hpl-cli-test-{}-{name}", std::process::id()));
    p
}

fn write_config(name: &str, body: &str) -> PathBuf {
    let path = temp_path(name);
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = "\
num_antennas = 8
num_users = 2
num_rf_chains = 2
num_paths = 2
snr_grid_db = 0, 10
num_trials = 3
root_seed = 42
strategies = proposed-fc, zf-fully-digital
";

#[test]
fn version_prints_and_exits_zero() {
    let out = hpl().arg("version").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("hpl "), "unexpected output: {text}");
}

#[test]
fn unknown_flag_exits_one_with_usage_on_stderr() {
    let out = hpl().args(["run", "--definitely-not-a-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.to_lowercase().contains("usage"), "stderr: {err}");
}

#[test]
fn run_writes_csv() {
    let config = write_config("run.conf", SMALL);
    let out_path = temp_path("run.csv");
    let out = hpl()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("strategy,snr_db,mean_sum_se,std_sum_se,trials,mean_build_seconds\n"));
    // header + 2 strategies x 2 SNR points
    assert_eq!(text.lines().count(), 5);
    assert!(text.contains("proposed-fc"));
    assert!(text.contains("zf-fully-digital"));
}

#[test]
fn sweep_overrides_snr_grid() {
    let config = write_config("sweep.conf", SMALL);
    let out_path = temp_path("sweep.csv");
    let out = hpl()
        .args(["sweep", "--config"])
        .arg(&config)
        .args(["--snr-db", "-5:5:5", "--out"])
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    // header + 2 strategies x 3 SNR points
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn validate_reports_divisibility_violation() {
    let body = SMALL
        .replace("num_antennas = 8", "num_antennas = 31")
        .replace(
            "strategies = proposed-fc, zf-fully-digital",
            "strategies = proposed-dynamic",
        )
        .replace("num_rf_chains = 2", "num_rf_chains = 4");
    let config = write_config("indivisible.conf", &body);
    let out = hpl().args(["validate", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("divisible"), "stderr should name divisibility: {err}");
}

#[test]
fn validate_smoke_trial_prints_diagnostics() {
    let config = write_config("validate.conf", SMALL);
    let out = hpl().args(["validate", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("unit-modulus dev"));
    assert!(text.contains("WMMSE convergence"));
    assert!(text.contains("sum-SE trace"));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = hpl()
        .args(["run", "--config", "/nonexistent/nowhere.conf", "--out", "/tmp/x.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seed_flag_overrides_root_seed() {
    let config = write_config("seed.conf", SMALL);
    let out_a = temp_path("seed-a.csv");
    let out_b = temp_path("seed-b.csv");
    let out_c = temp_path("seed-c.csv");
    for (path, seed) in [(&out_a, "7"), (&out_b, "7"), (&out_c, "8")] {
        let status = hpl()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(path)
            .args(["--seed", seed])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let strip_timing = |text: &str| -> String {
        text.lines()
            .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap())
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = strip_timing(&std::fs::read_to_string(&out_a).unwrap());
    let b = strip_timing(&std::fs::read_to_string(&out_b).unwrap());
    let c = strip_timing(&std::fs::read_to_string(&out_c).unwrap());
    assert_eq!(a, b, "same seed must reproduce identical results");
    assert_ne!(a, c, "different seeds must change the results");
}

#[test]
fn threads_flag_does_not_change_results() {
    let config = write_config("threads.conf", SMALL);
    let out_1 = temp_path("threads-1.csv");
    let out_8 = temp_path("threads-8.csv");
    for (path, threads) in [(&out_1, "1"), (&out_8, "8")] {
        let status = hpl()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(path)
            .args(["--threads", threads])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let strip_timing = |text: &str| -> String {
        text.lines()
            .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap())
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = strip_timing(&std::fs::read_to_string(&out_1).unwrap());
    let b = strip_timing(&std::fs::read_to_string(&out_8).unwrap());
    assert_eq!(a, b);
}
