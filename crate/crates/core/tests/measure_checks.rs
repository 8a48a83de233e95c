//! Integration tests for the parametric measures and their diagnostics.

use linf_eigen::densities::{DensityF, DensityG};
use linf_eigen::discretization::{BcMode, GridField, Operators};
use linf_eigen::geometry::{build_grid, DomainKind, DomainSpec, GridSpec};
use linf_eigen::measures::{
    assemble_measures, mass_bounds_report, nu_concentration, pairing_residual, weakstar_trace,
};
use linf_eigen::psolver::{bubble_init, solve_p, Discretized, PRunResult, SolverSettings};

fn interval(n: usize) -> GridSpec {
    let dom = DomainSpec::new(DomainKind::Interval { a: 0.0, b: 1.0 }, 1).unwrap();
    build_grid(&dom, n).unwrap()
}

fn march<'a>(
    model: &Discretized<'a>,
    grid: &GridSpec,
    p_max: f64,
) -> Vec<PRunResult> {
    let settings = SolverSettings::default();
    let mut u = bubble_init(grid, 1, BcMode::Hinged);
    let mut warm = None;
    let mut out = Vec::new();
    let mut p = 4.0;
    while p <= p_max {
        let r = solve_p(model, &u, p, &settings, warm).unwrap();
        u = r.u_p.clone();
        warm = Some(r.warm);
        out.push(r);
        p *= 2.0;
    }
    out
}

#[test]
fn uniform_constraint_field_gives_unit_nu_mass() {
    // synthetic u with g(u, Du) == 1 everywhere -> nu uniform, mass exactly 1
    let grid = interval(51);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::eta_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    let u = GridField::from_fn_unconstrained(&grid, 1, BcMode::Hinged, |_, _| 1.0);
    let fake = PRunResult {
        p: 16.0,
        u_p: u,
        ln_lambda_p: 0.0,
        lambda_p: 1.0,
        eigenvalue: 1.0,
        l_p: 1.0,
        theta: 1.0,
        constraint_residual: 0.0,
        el_residual: 0.0,
        inner_iterations: 0,
        outer_iterations: 0,
        converged: true,
        sandwich_ok: true,
        warm_start_scale: 1.0,
        warm: linf_eigen::psolver::WarmStart { theta: 1.0, penalty: 1.0 },
    };
    let (_, nu) = assemble_measures(&model, &fake).unwrap();
    assert_eq!(nu.total_variation, 1.0);
    assert!(nu.weights.iter().all(|w| (*w - 1.0).abs() < 1e-15));
}

#[test]
fn nu_mass_bounded_by_one_at_all_exponents() {
    let grid = interval(101);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::eta_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    for r in march(&model, &grid, 128.0) {
        let (m, nu) = assemble_measures(&model, &r).unwrap();
        let report = mass_bounds_report(&model, &m, &nu, &r);
        assert!(report.nu_ok, "p = {}: mass {}", r.p, report.nu_mass);
        assert!(report.m_ok, "p = {}: |M| {} vs bound {}", r.p, report.m_mass, report.m_bound);
        assert!(nu.weights.iter().all(|w| *w >= 0.0));
    }
}

#[test]
fn nu_concentrates_where_g_is_near_max() {
    let grid = interval(201);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::eta_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    let runs = march(&model, &grid, 128.0);
    let r = runs.last().unwrap();
    let (_, nu) = assemble_measures(&model, r).unwrap();
    let frac = nu_concentration(&model, &nu, r, 0.95);
    assert!(frac >= 0.90, "concentration {frac}");
}

#[test]
fn m_mass_bound_violation_detected_for_halved_lambda() {
    // halving Lambda_p scales the M weights by 2^{p-1}: the total-variation
    // bound with the (halved) eigenvalue substituted must flag it
    let grid = interval(101);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::eta_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    let runs = march(&model, &grid, 32.0);
    let r = runs.last().unwrap();
    let mut tampered = r.clone();
    tampered.eigenvalue /= 2.0;
    let (m, nu) = assemble_measures(&model, &tampered).unwrap();
    let report = mass_bounds_report(&model, &m, &nu, &tampered);
    assert!(!report.m_ok, "tampered mass {} vs bound {}", report.m_mass, report.m_bound);
}

#[test]
fn pairing_residual_tracks_weak_form() {
    let grid = interval(201);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::eta_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    for r in march(&model, &grid, 64.0) {
        let (m, nu) = assemble_measures(&model, &r).unwrap();
        let res = pairing_residual(&model, &m, &nu, &r, 20, None);
        let tol = (1e-8f64).max(10.0 * r.el_residual);
        assert!(res <= tol, "p = {}: pairing {res} vs tol {tol}", r.p);
    }
}

#[test]
fn mis_scaled_lambda_shows_in_pairing_residual() {
    let grid = interval(201);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::eta_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    let runs = march(&model, &grid, 32.0);
    let r = runs.last().unwrap();
    let (m, nu) = assemble_measures(&model, r).unwrap();
    let clean = pairing_residual(&model, &m, &nu, r, 20, None);
    let skewed = pairing_residual(&model, &m, &nu, r, 20, Some(1.1 * r.eigenvalue));
    // the right-hand side is linear in Lambda: a 10% mis-scaling surfaces as
    // a residual of that order against the measure scale
    assert!(skewed > 1e3 * clean.max(1e-12), "clean {clean} skewed {skewed}");
    assert!((0.01..0.5).contains(&skewed), "skewed {skewed}");
}

#[test]
fn weakstar_pairings_are_cauchy_along_the_schedule() {
    let grid = interval(101);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::eta_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    let runs = march(&model, &grid, 128.0);
    let steps: Vec<_> = runs
        .iter()
        .map(|r| {
            let (m, nu) = assemble_measures(&model, r).unwrap();
            (r.p, m, nu)
        })
        .collect();
    let table = weakstar_trace(&model, &steps, 6);
    assert_eq!(table.len(), runs.len());
    for k in 0..table[0].nu_pairings.len() {
        let first = (table[1].nu_pairings[k] - table[0].nu_pairings[k]).abs();
        let last = (table[table.len() - 1].nu_pairings[k]
            - table[table.len() - 2].nu_pairings[k])
            .abs();
        assert!(last <= first + 1e-12, "field {k}: {last} vs {first}");
    }
    // constant test function against nu reproduces the mass sequence
    for (row, (_, _, nu)) in table.iter().zip(&steps) {
        assert!((row.nu_pairings[0] - nu.total_variation).abs() < 1e-14);
    }
}

#[test]
fn antisymmetric_test_function_pairs_to_zero_on_symmetric_problem() {
    let grid = interval(101);
    let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
    let f = DensityF::power_frobenius(2.0).unwrap();
    let g = DensityG::eta_power(2.0).unwrap();
    let model = Discretized::new(&grid, &ops, &f, &g, 1);
    let runs = march(&model, &grid, 64.0);
    for r in &runs {
        let (_, nu) = assemble_measures(&model, r).unwrap();
        let phi: Vec<f64> = (0..grid.num_nodes()).map(|i| grid.coord(i)[0] - 0.5).collect();
        let pairing = nu.pair_scalar(&grid, &phi);
        assert!(pairing.abs() <= 1e-7, "p = {}: {pairing}", r.p);
    }
}
