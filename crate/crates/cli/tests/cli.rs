//! Smoke tests for the batch CLI: exit codes and artifact round trips.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_linf-eigen"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir =
        std::env::temp_dir().join(format!("linf-eigen-cli-{}-{}", std::process::id(), tag));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &std::path::Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn small_benchmark(dir: &std::path::Path) -> String {
    format!(
        r#"
seed = 1
output_dir = "{}"

[domain]
kind = "interval"
a = 0.0
b = 1.0

[problem]
bc = "hinged"
target_dim = 1

[density_f]
name = "power_frobenius"
alpha = 2.0

[density_g]
name = "eta_power"
gamma = 2.0

[grid]
resolution = 81

[schedule]
p0 = 4.0
factor = 2.0
p_max = 32.0
"#,
        dir.join("out").display()
    )
}

#[test]
fn run_then_verify_then_export() {
    let dir = temp_dir("ok");
    let config = write_config(&dir, &small_benchmark(&dir));
    let status = bin().arg("run").arg(&config).status().unwrap();
    assert!(status.success(), "run exited with {status}");

    let report = dir.join("out").join("report.json");
    let status = bin().arg("verify").arg(&report).status().unwrap();
    assert!(status.success(), "verify exited with {status}");

    let status = bin().arg("export-plots").arg(dir.join("out")).status().unwrap();
    assert!(status.success());
    assert!(dir.join("out").join("lambda_vs_p.csv").exists());
}

#[test]
fn malformed_config_exits_two_without_artifacts() {
    let dir = temp_dir("bad");
    let config = write_config(&dir, "this is not toml [");
    let out = bin().arg("run").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.join("out").exists());
}

#[test]
fn p_max_below_p0_names_the_field() {
    let dir = temp_dir("sched");
    let body = small_benchmark(&dir).replace("p_max = 32.0", "p_max = 2.0");
    let config = write_config(&dir, &body);
    let out = bin().arg("run").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("schedule.p_max"), "{stderr}");
}

#[test]
fn unknown_config_key_exits_two() {
    let dir = temp_dir("typo");
    let body = small_benchmark(&dir).replace("seed = 1", "seed = 1\nmystery = 4");
    let config = write_config(&dir, &body);
    let out = bin().arg("run").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("mystery"), "{stderr}");
}

#[test]
fn verify_reports_missing_artifact() {
    let dir = temp_dir("missing");
    let config = write_config(&dir, &small_benchmark(&dir));
    assert!(bin().arg("run").arg(&config).status().unwrap().success());
    fs::remove_file(dir.join("out").join("measures_p32.csv")).unwrap();
    let out = bin().arg("verify").arg(dir.join("out").join("report.json")).output().unwrap();
    assert!(!out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("missing artifact"), "{stdout}");
}
