//! Integration tests for the p-schedule driver, extrapolation and
//! checkpoint/resume determinism.

use linf_eigen::continuation::{
    run_continuation, Checkpoint, Schedule, TerminationReason,
};
use linf_eigen::densities::{DensityF, DensityG};
use linf_eigen::discretization::{lp_mean_norm, BcMode, Operators};
use linf_eigen::geometry::{build_grid, DomainKind, DomainSpec, GridSpec};
use linf_eigen::psolver::{Discretized, SolverSettings};

fn interval(n: usize) -> GridSpec {
    let dom = DomainSpec::new(DomainKind::Interval { a: 0.0, b: 1.0 }, 1).unwrap();
    build_grid(&dom, n).unwrap()
}

fn schedule(p_max: f64) -> Schedule {
    Schedule { p0: 4.0, factor: 2.0, p_max, lambda_rtol: 0.0 }
}

#[test]
fn hinged_benchmark_converges_to_lp_oracle_value() {
    let grid = interval(201);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::eta_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    let trace =
        run_continuation(&model, BcMode::Hinged, &schedule(256.0), &SolverSettings::default(), None)
            .unwrap();
    assert_eq!(trace.termination, TerminationReason::ReachedPMax);
    assert!(trace.steps.iter().all(|s| s.result.converged));
    // the eigenvalue sequence decreases towards the supremal value 64
    let lambdas: Vec<f64> = trace.steps.iter().map(|s| s.result.eigenvalue).collect();
    for w in lambdas.windows(2) {
        assert!(w[1] < w[0], "{lambdas:?}");
    }
    let e = trace.extrapolation.unwrap();
    assert!((e.lambda_inf - 64.0).abs() / 64.0 <= 0.05, "{}", e.lambda_inf);
    // equal-degree homogeneity: Lambda_p and L_p agree along the whole trace
    for s in &trace.steps {
        assert!((s.result.eigenvalue - s.result.l_p).abs() <= 1e-6 * s.result.l_p);
    }
}

#[test]
fn gradient_constraint_benchmark_converges_to_four() {
    // analytic oracle: u = x - x^2 gives min max|u''| = 2, squared = 4
    let grid = interval(201);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::p_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    let trace =
        run_continuation(&model, BcMode::Hinged, &schedule(256.0), &SolverSettings::default(), None)
            .unwrap();
    let e = trace.extrapolation.unwrap();
    assert!((e.lambda_inf - 4.0).abs() / 4.0 <= 0.05, "{}", e.lambda_inf);
}

#[test]
fn norm_monotonicity_echo_along_trace() {
    // for each stored u_p and q <= p: ||f(D2 u_p)||_q <= L_p
    let grid = interval(101);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::eta_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    let trace =
        run_continuation(&model, BcMode::Hinged, &schedule(64.0), &SolverSettings::default(), None)
            .unwrap();
    for s in &trace.steps {
        let data = model.field_data(&s.result.u_p);
        let mut q = 1.0;
        while q <= s.result.p {
            let nq = lp_mean_norm(&data.fvals, q, &grid).unwrap().value;
            assert!(
                nq <= s.result.l_p * (1.0 + 1e-12),
                "p = {}, q = {q}: {nq} vs {}",
                s.result.p,
                s.result.l_p
            );
            q *= 2.0;
        }
    }
}

#[test]
fn c1_proxy_differences_eventually_decrease() {
    let grid = interval(101);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::eta_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    let trace =
        run_continuation(&model, BcMode::Hinged, &schedule(256.0), &SolverSettings::default(), None)
            .unwrap();
    let diffs: Vec<f64> = trace
        .steps
        .iter()
        .filter_map(|s| Some(s.diagnostics.c0_diff? + s.diagnostics.c1_diff?))
        .collect();
    assert!(diffs.len() >= 4);
    // eventually decreasing: the tail differences shrink
    let tail = &diffs[diffs.len() - 3..];
    assert!(tail[1] <= tail[0] && tail[2] <= tail[1], "{diffs:?}");
}

#[test]
fn final_constraint_sup_approaches_one() {
    let grid = interval(101);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::eta_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    let trace =
        run_continuation(&model, BcMode::Hinged, &schedule(256.0), &SolverSettings::default(), None)
            .unwrap();
    let sups: Vec<f64> = trace.steps.iter().map(|s| s.diagnostics.constraint_sup).collect();
    // ||g||_inf >= ||g||_p = 1, and the gap closes as p grows
    for (k, s) in sups.iter().enumerate() {
        assert!(*s >= 1.0 - 1e-9, "step {k}: {s}");
    }
    for w in sups.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{sups:?}");
    }
    assert!(sups.last().unwrap() - 1.0 <= 0.02, "{sups:?}");
}

#[test]
fn single_step_schedule_has_no_extrapolation() {
    let grid = interval(61);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::eta_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    let trace = run_continuation(
        &model,
        BcMode::Hinged,
        &Schedule { p0: 4.0, factor: 2.0, p_max: 4.0, lambda_rtol: 0.0 },
        &SolverSettings::default(),
        None,
    )
    .unwrap();
    assert_eq!(trace.steps.len(), 1);
    assert!(trace.extrapolation.is_none());
    assert_eq!(trace.lambda_estimate(), trace.final_eigenvalue());
}

#[test]
fn lambda_rtol_triggers_early_termination() {
    let grid = interval(61);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::eta_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    let trace = run_continuation(
        &model,
        BcMode::Hinged,
        &Schedule { p0: 4.0, factor: 2.0, p_max: 1024.0, lambda_rtol: 0.08 },
        &SolverSettings::default(),
        None,
    )
    .unwrap();
    assert_eq!(trace.termination, TerminationReason::LambdaConverged);
    assert!(trace.steps.last().unwrap().result.p < 1024.0);
}

#[test]
fn sandwich_check_rejects_vanishing_eigenvalue() {
    use linf_eigen::bounds::{bounds_report, sandwich_check};
    use linf_eigen::geometry::descriptors;
    let grid = interval(61);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::eta_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    let mut trace =
        run_continuation(&model, BcMode::Hinged, &schedule(8.0), &SolverSettings::default(), None)
            .unwrap();
    let geo = descriptors(&grid.domain);
    let report = bounds_report(&f.constants, &g, &geo, BcMode::Hinged, 1, 1);
    assert!(sandwich_check(&report, &trace).is_ok());
    // the supremal eigenvalue is strictly positive; zero must hard-fail
    trace.steps.last_mut().unwrap().result.eigenvalue = 0.0;
    assert!(sandwich_check(&report, &trace).is_err());
}

#[test]
fn checkpoint_resume_reproduces_uninterrupted_trace_bitwise() {
    let grid = interval(101);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::eta_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    let settings = SolverSettings::default();
    let sched = schedule(128.0);
    let full = run_continuation(&model, BcMode::Hinged, &sched, &settings, None).unwrap();

    // save after p = 32 (step index 3), resume to p = 128
    let idx = full.steps.iter().position(|s| s.result.p == 32.0).unwrap();
    let cp_hash = 0x5eed_u64;
    let cp = Checkpoint::from_step(cp_hash, idx, &full.steps[idx].result, 7);
    let bytes = cp.to_bytes();
    let cp = Checkpoint::from_bytes(&bytes).unwrap();
    let resumed = cp.resume(&model, &sched, &settings, cp_hash).unwrap();

    let rest = &full.steps[idx + 1..];
    assert_eq!(resumed.steps.len(), rest.len());
    for (a, b) in resumed.steps.iter().zip(rest) {
        assert_eq!(a.result.p, b.result.p);
        // bit-identical eigenvalues and iterates (fixed reduction order)
        assert_eq!(a.result.eigenvalue.to_bits(), b.result.eigenvalue.to_bits());
        assert_eq!(a.result.u_p.values, b.result.u_p.values);
    }

    // config-hash mismatch (e.g. changed resolution) is rejected
    assert!(cp.resume(&model, &sched, &settings, cp_hash ^ 1).is_err());
}
