//! End-to-end artifact pipeline: run → verify → export, fault injection,
//! and bit-identical reruns.

use std::fs;
use std::path::PathBuf;

use linf_eigen::config::parse_config;
use linf_eigen::runner::{export_plots, run_validated, verify, EXIT_OK};

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir()
        .join(format!("linf-eigen-test-{}-{}", std::process::id(), tag));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn bench_config(out_dir: &std::path::Path) -> String {
    format!(
        r#"
seed = 11
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
resolution = 101

[schedule]
p0 = 4.0
factor = 2.0
p_max = 64.0
"#,
        out_dir.display()
    )
}

#[test]
fn run_writes_artifacts_and_verify_passes() {
    let dir = temp_dir("run");
    let cfg = parse_config(&bench_config(&dir)).unwrap();
    let outcome = run_validated(&cfg).unwrap();
    assert_eq!(outcome.exit_code, EXIT_OK);
    let report = outcome.report.unwrap();
    assert!(report.invariants.overall);
    assert_eq!(report.per_p.len(), 5); // 4, 8, 16, 32, 64

    for name in ["report.json", "trace.csv", "timings.json", "measures_p64.csv", "checkpoint_p64.bin"] {
        assert!(dir.join(name).exists(), "missing {name}");
    }

    let v = verify(&dir.join("report.json")).unwrap();
    assert!(v.missing.is_empty(), "{:?}", v.missing);
    assert!(v.ok, "{:#?}", v.checks);

    // export: lambda_vs_p with a monotone p column, node file with 1-D coords
    let files = export_plots(&dir).unwrap();
    assert_eq!(files.len(), 2);
    let lambda_csv = fs::read_to_string(dir.join("lambda_vs_p.csv")).unwrap();
    let ps: Vec<f64> = lambda_csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(ps.windows(2).all(|w| w[1] > w[0]), "{ps:?}");
    let nodes_csv = fs::read_to_string(dir.join("measure_nodes.csv")).unwrap();
    assert!(nodes_csv.starts_with("x,g_density,nu_weight,m_abs"));
}

#[test]
fn rerun_with_same_config_is_bit_identical() {
    let dir = temp_dir("determinism");
    let cfg = parse_config(&bench_config(&dir)).unwrap();
    run_validated(&cfg).unwrap();
    let first = fs::read(dir.join("report.json")).unwrap();
    let first_trace = fs::read(dir.join("trace.csv")).unwrap();
    run_validated(&cfg).unwrap();
    let second = fs::read(dir.join("report.json")).unwrap();
    let second_trace = fs::read(dir.join("trace.csv")).unwrap();
    assert_eq!(first, second, "report.json differs between reruns");
    assert_eq!(first_trace, second_trace, "trace.csv differs between reruns");
}

#[test]
fn tampered_trace_fails_verification() {
    let dir = temp_dir("tamper");
    let cfg = parse_config(&bench_config(&dir)).unwrap();
    run_validated(&cfg).unwrap();
    // push every eigenvalue up 10%: the multiplier sandwich must break
    let trace = fs::read_to_string(dir.join("trace.csv")).unwrap();
    let mut lines: Vec<String> = trace.lines().map(String::from).collect();
    for line in lines.iter_mut().skip(1) {
        let mut cells: Vec<String> = line.split(',').map(String::from).collect();
        let lambda: f64 = cells[1].parse().unwrap();
        cells[1] = format!("{}", lambda * 1.1);
        *line = cells.join(",");
    }
    fs::write(dir.join("trace.csv"), lines.join("\n") + "\n").unwrap();
    let v = verify(&dir.join("report.json")).unwrap();
    assert!(!v.ok);
    let sandwich = v.checks.iter().find(|(n, _, _)| n.contains("sandwich")).unwrap();
    assert!(!sandwich.1, "sandwich check unexpectedly passed: {sandwich:?}");
}

#[test]
fn missing_measures_file_is_reported() {
    let dir = temp_dir("missing");
    let cfg = parse_config(&bench_config(&dir)).unwrap();
    run_validated(&cfg).unwrap();
    fs::remove_file(dir.join("measures_p64.csv")).unwrap();
    let v = verify(&dir.join("report.json")).unwrap();
    assert!(!v.ok);
    assert!(v.missing.iter().any(|m| m.contains("measures_p64")), "{:?}", v.missing);
}

#[test]
fn shipped_benchmark_configs_parse_and_hinged_verifies() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["hinged_1d.toml", "clamped_1d.toml", "gradient_1d.toml", "disc_2d.toml"] {
        let text = fs::read_to_string(root.join(name)).unwrap();
        parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    // run the hinged benchmark config end to end (output redirected)
    let dir = temp_dir("shipped");
    let text = fs::read_to_string(root.join("hinged_1d.toml")).unwrap();
    let text = text.replace(
        "output_dir = \"out/hinged_1d\"",
        &format!("output_dir = \"{}\"", dir.display()),
    );
    let cfg = parse_config(&text).unwrap();
    let outcome = run_validated(&cfg).unwrap();
    assert_eq!(outcome.exit_code, EXIT_OK);
    let v = verify(&dir.join("report.json")).unwrap();
    assert!(v.ok, "{:#?}", v.checks);
}

#[test]
fn two_dimensional_run_exports_both_coordinates() {
    let dir = temp_dir("disc");
    let text = format!(
        r#"
seed = 3
output_dir = "{}"

[domain]
kind = "disc"
cx = 0.0
cy = 0.0
radius = 1.0

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
resolution = 21

[schedule]
p0 = 4.0
factor = 2.0
p_max = 16.0
"#,
        dir.display()
    );
    let cfg = parse_config(&text).unwrap();
    let outcome = run_validated(&cfg).unwrap();
    assert_eq!(outcome.exit_code, EXIT_OK);
    let v = verify(&dir.join("report.json")).unwrap();
    assert!(v.ok, "{:#?}", v.checks);
    export_plots(&dir).unwrap();
    let nodes_csv = fs::read_to_string(dir.join("measure_nodes.csv")).unwrap();
    assert!(nodes_csv.starts_with("x,y,"), "{}", &nodes_csv[..40.min(nodes_csv.len())]);
}
