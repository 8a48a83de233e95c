//! Batch CLI for the L∞ eigenvalue solver.
//!
//! Subcommands:
//!   run <config>        solve the configured problem, write artifacts
//!   verify <report>     re-run the invariant suite on stored artifacts
//!   export-plots <dir>  emit plot-ready columnar files from a run directory
//!
//! Exit codes for `run`: 0 success, 2 config error, 3 solver failure,
//! 4 invariant violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "linf-eigen", about = "Second-order vectorial L-infinity eigenvalue solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem described by a TOML config and write the artifact set.
    Run {
        /// Path to the run configuration file.
        config: PathBuf,
    },
    /// Recompute the invariant checks from stored artifacts without re-solving.
    Verify {
        /// Path to a report.json produced by `run`.
        report: PathBuf,
    },
    /// Emit lambda_vs_p.csv and measure_nodes.csv from a run directory.
    ExportPlots {
        /// Directory containing report.json, trace.csv and measures files.
        run_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            // LINF_EIGEN_THREADS is accepted for interface compatibility;
            // runs execute on one thread so artifacts stay bit-reproducible
            if let Ok(threads) = std::env::var("LINF_EIGEN_THREADS") {
                match threads.parse::<usize>() {
                    Ok(1) => {}
                    Ok(n) => eprintln!(
                        "note: LINF_EIGEN_THREADS={n} requested; running single-threaded to keep \
                         artifacts bit-reproducible"
                    ),
                    Err(_) => {
                        eprintln!("config error: LINF_EIGEN_THREADS must be a positive integer");
                        return ExitCode::from(2);
                    }
                }
            }
            let outcome = linf_eigen::runner::run(&config);
            if let Some(report) = &outcome.report {
                println!(
                    "run finished: {} steps, termination {:?}, overall invariants {}",
                    report.per_p.len(),
                    report.termination,
                    if report.invariants.overall { "PASS" } else { "FAIL" }
                );
                if let Some(est) = report.lambda_estimate {
                    println!("eigenvalue estimate: {est}");
                }
                println!("artifacts in {}", outcome.output_dir.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Command::Verify { report } => match linf_eigen::runner::verify(&report) {
            Ok(v) => {
                for (name, ok, detail) in &v.checks {
                    println!("{}: {} ({detail})", name, if *ok { "PASS" } else { "FAIL" });
                }
                for m in &v.missing {
                    println!("missing artifact: {m}");
                }
                if v.ok {
                    println!("verify: PASS");
                    ExitCode::SUCCESS
                } else {
                    println!("verify: FAIL");
                    ExitCode::FAILURE
                }
            }
            Err(e) => {
                eprintln!("verify error: {e}");
                ExitCode::FAILURE
            }
        },
        Command::ExportPlots { run_dir } => match linf_eigen::runner::export_plots(&run_dir) {
            Ok(files) => {
                for f in files {
                    println!("wrote {}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("export error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
