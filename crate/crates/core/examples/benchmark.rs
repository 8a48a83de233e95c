//! Runs one of the reference eigenvalue problems through the library API and
//! prints the continuation trace.
//!
//! Usage: cargo run --release --example benchmark [hinged|clamped|gradient|disc]

use linf_eigen::continuation::{run_continuation, Schedule};
use linf_eigen::densities::{DensityF, DensityG};
use linf_eigen::discretization::{BcMode, Operators};
use linf_eigen::geometry::{build_grid, DomainKind, DomainSpec};
use linf_eigen::psolver::{Discretized, SolverSettings};

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "hinged".into());
    let interval = DomainSpec::new(DomainKind::Interval { a: 0.0, b: 1.0 }, 1).unwrap();
    let disc = DomainSpec::new(DomainKind::Disc { center: [0.0, 0.0], radius: 1.0 }, 1).unwrap();
    let (dom, bc, g, res, p_max) = match which.as_str() {
        "hinged" => (interval, BcMode::Hinged, DensityG::eta_power(2.0).unwrap(), 401, 512.0),
        "clamped" => (interval, BcMode::Clamped, DensityG::eta_power(2.0).unwrap(), 401, 512.0),
        "gradient" => (interval, BcMode::Hinged, DensityG::p_power(2.0).unwrap(), 401, 512.0),
        "disc" => (disc, BcMode::Hinged, DensityG::eta_power(2.0).unwrap(), 61, 128.0),
        other => {
            eprintln!("unknown benchmark `{other}`; use hinged|clamped|gradient|disc");
            std::process::exit(2);
        }
    };

    let start = std::time::Instant::now();
    let grid = build_grid(&dom, res).unwrap();
    let ops = Operators::build(&grid, bc).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    let schedule = Schedule { p0: 4.0, factor: 2.0, p_max, lambda_rtol: 0.0 };
    let trace = run_continuation(&model, bc, &schedule, &SolverSettings::default(), None).unwrap();

    println!("{:>6} {:>12} {:>10} {:>10} {:>9} {:>9}", "p", "Lambda_p", "el_res", "c_res", "nu_mass", "sup_g");
    for s in &trace.steps {
        println!(
            "{:>6} {:>12.6} {:>10.2e} {:>10.2e} {:>9.4} {:>9.5}",
            s.result.p,
            s.result.eigenvalue,
            s.result.el_residual,
            s.result.constraint_residual,
            s.diagnostics.mass.nu_mass,
            s.diagnostics.constraint_sup,
        );
    }
    println!("termination: {:?}", trace.termination);
    if let Some(e) = trace.extrapolation {
        println!(
            "extrapolated eigenvalue: {:.6} (1/p slope {:.2}, fit residual {:.1e})",
            e.lambda_inf, e.slope, e.fit_residual
        );
    }
    println!("elapsed: {:.2}s", start.elapsed().as_secs_f64());
}
