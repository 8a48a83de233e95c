//! The finite-p constrained solve: minimise ‖f(D²u)‖_{L^p} subject to
//! ‖g(u, Du)‖_{L^p} = 1, and extract the Lagrange multiplier.
//!
//! The optimiser works on the norm form of the functionals, which stays in
//! floating-point range for arbitrarily large p (all node powers appear as
//! ratios against the field maximum). The multiplier of the weak form,
//! λ_p = θ · L_p^{p-1}, is carried in logarithmic form; λ_p itself overflows
//! f64 once p ln Λ_p exceeds ~709, so consumers should prefer `ln_lambda_p`.
//!
//! Multiplier extraction: the converged multiplier is read off by testing the
//! discrete weak form with φ = u_p, θ = ⟨∇F, u⟩ / ⟨∇G, u⟩ — exact for
//! homogeneous densities by the Euler identity, and consistent up to the KKT
//! residual otherwise. A least-squares fit over scalar multipliers backs it
//! up when the pairing degenerates; the raw augmented-Lagrangian estimate
//! θ − μc only seeds the next warm start.

mod lbfgs;
mod precond;

pub use lbfgs::{minimize as lbfgs_minimize, LbfgsOptions, LbfgsOutcome};
pub use precond::BandedPreconditioner;

use serde::{Deserialize, Serialize};

use crate::densities::{sym_inner, sym_len, DensityF, DensityG};
use crate::discretization::{weighted_power_mean, BcMode, GridField, Operators, PowerMean};
use crate::error::Error;
use crate::geometry::{GridSpec, NodeState};
use crate::normalization::{self, Exponent};
use crate::util::{dot, pairwise_sum};
use crate::Result;

/// Tolerances and budgets of the augmented-Lagrangian solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub penalty_growth: f64,
    /// Relative gradient tolerance of the final inner solve.
    pub grad_tol: f64,
    /// Absolute tolerance on |‖g(u, Du)‖_p − 1|.
    pub constraint_tol: f64,
    /// Number of discrete test fields used by the weak-form residual.
    pub el_test_fields: usize,
    pub lbfgs_memory: usize,
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            outer_iterations: 40,
            inner_iterations: 6000,
            penalty_growth: 10.0,
            grad_tol: 1e-9,
            constraint_tol: 1e-9,
            el_test_fields: 24,
            lbfgs_memory: 16,
            seed: 0,
        }
    }
}

impl SolverSettings {
    fn validate(&self) -> Result<()> {
        if self.outer_iterations == 0
            || self.inner_iterations == 0
            || !(self.penalty_growth > 1.0)
            || !(self.grad_tol > 0.0)
            || !(self.constraint_tol > 0.0)
            || self.el_test_fields == 0
            || self.lbfgs_memory == 0
        {
            return Err(Error::SolverFailed("solver settings must be positive".into()));
        }
        Ok(())
    }
}

/// Warm-start state carried between continuation steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    pub theta: f64,
    pub penalty: f64,
}

/// Converged (u_p, λ_p, Λ_p, L_p) for one exponent, with verified residuals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PRunResult {
    pub p: f64,
    pub u_p: GridField,
    /// ln λ_p (always finite on success).
    pub ln_lambda_p: f64,
    /// λ_p = exp(ln_lambda_p); +∞ once out of f64 range.
    pub lambda_p: f64,
    /// Λ_p = λ_p^{1/p}.
    pub eigenvalue: f64,
    /// L_p = ‖f(D²u_p)‖_{L^p}.
    pub l_p: f64,
    /// Multiplier of the norm-form problem; λ_p = θ L_p^{p-1}.
    pub theta: f64,
    pub constraint_residual: f64,
    pub el_residual: f64,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    pub converged: bool,
    /// Euler-constant multiplier sandwich with slack 10·el_residual.
    pub sandwich_ok: bool,
    /// Scaling applied to the warm start by the internal re-normalisation.
    pub warm_start_scale: f64,
    /// Warm-start state for the next continuation step.
    pub warm: WarmStart,
}

impl PRunResult {
    /// (C1/C8)^{1/p} L_p ≤ Λ_p ≤ (C2/C7)^{1/p} L_p within `slack`.
    pub fn multiplier_sandwich(&self, f: &DensityF, g: &DensityG) -> (f64, f64, f64) {
        let lo = (f.constants.c1 / g.constants.c8).powf(1.0 / self.p) * self.l_p;
        let hi = (f.constants.c2 / g.constants.c7).powf(1.0 / self.p) * self.l_p;
        (lo, self.eigenvalue, hi)
    }
}

/// Shared per-solve discrete model: grid, operators, densities and scratch.
pub struct Discretized<'a> {
    pub grid: &'a GridSpec,
    pub ops: &'a Operators,
    pub f: &'a DensityF,
    pub g: &'a DensityG,
    pub ncomp: usize,
    dim: usize,
    slen: usize,
    /// interior dof -> node index
    dof_nodes: Vec<usize>,
    /// bilaplacian metric shared by every p-solve on this grid
    precond: Option<BandedPreconditioner>,
}

/// Per-node evaluation data reused by the objective, constraint and residual
/// assembly.
pub struct FieldData {
    pub du: Vec<f64>,
    pub d2: Vec<f64>,
    pub fvals: Vec<f64>,
    pub gvals: Vec<f64>,
}

impl<'a> Discretized<'a> {
    pub fn new(
        grid: &'a GridSpec,
        ops: &'a Operators,
        f: &'a DensityF,
        g: &'a DensityG,
        ncomp: usize,
    ) -> Self {
        let precond =
            BandedPreconditioner::build(grid, ops).map(|p| p.with_components(ncomp));
        Discretized {
            grid,
            ops,
            f,
            g,
            ncomp,
            dim: grid.domain.dim,
            slen: sym_len(grid.domain.dim),
            dof_nodes: grid.interior.clone(),
            precond,
        }
    }

    pub fn num_dof(&self) -> usize {
        self.dof_nodes.len() * self.ncomp
    }

    pub fn preconditioner(&self) -> Option<&BandedPreconditioner> {
        self.precond.as_ref()
    }

    pub fn pack(&self, field: &GridField) -> Vec<f64> {
        let mut x = vec![0.0; self.num_dof()];
        for (k, &node) in self.dof_nodes.iter().enumerate() {
            for c in 0..self.ncomp {
                x[k * self.ncomp + c] = field.values[node * self.ncomp + c];
            }
        }
        x
    }

    pub fn unpack(&self, x: &[f64], bc: BcMode) -> GridField {
        let mut field = GridField::zeros(self.grid, self.ncomp, bc);
        for (k, &node) in self.dof_nodes.iter().enumerate() {
            for c in 0..self.ncomp {
                field.values[node * self.ncomp + c] = x[k * self.ncomp + c];
            }
        }
        field
    }

    fn restrict(&self, full: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_dof()];
        for (k, &node) in self.dof_nodes.iter().enumerate() {
            for c in 0..self.ncomp {
                out[k * self.ncomp + c] = full[node * self.ncomp + c];
            }
        }
        out
    }

    /// Evaluates Du, D²u, f(D²u) and g(u, Du) at every node.
    pub fn field_data(&self, u: &GridField) -> FieldData {
        let n = self.grid.num_nodes();
        let du = self.ops.gradient(self.grid, u);
        let d2 = self.ops.hessian(self.grid, u);
        let mut fvals = vec![0.0; n];
        let mut gvals = vec![0.0; n];
        let cs = self.ncomp * self.slen;
        let cd = self.ncomp * self.dim;
        for node in 0..n {
            fvals[node] = self.f.eval_packed(&d2[node * cs..(node + 1) * cs], self.dim);
            gvals[node] = self.g.eval(
                &u.values[node * self.ncomp..(node + 1) * self.ncomp],
                &du[node * cd..(node + 1) * cd],
                self.dim,
            );
        }
        FieldData { du, d2, fvals, gvals }
    }

    /// Norm F = ‖f(D²u)‖_{L^p,w} and its gradient w.r.t. the interior dof.
    ///
    /// The per-node multiplier is σ_i = ω_i (f_i/m)^{p-1} S^{-(p-1)/p}, all of
    /// which stays within f64 range for any p.
    pub fn objective_norm(&self, _u: &GridField, data: &FieldData, p: f64) -> (f64, Vec<f64>) {
        let pm = weighted_power_mean(&data.fvals, p, self.grid);
        let norm = pm.norm();
        let n = self.grid.num_nodes();
        let mut full = vec![0.0; n * self.ncomp];
        if pm.max_factor > 0.0 {
            let t = (-(p - 1.0) / p * pm.mean_ratio.ln()).exp();
            let mut mult = vec![0.0; n * self.ncomp * self.slen];
            let cs = self.ncomp * self.slen;
            let mut grad_f = vec![0.0; cs];
            for node in 0..n {
                let w = self.grid.cell_volumes[node];
                if w == 0.0 {
                    continue;
                }
                let sigma = (w / self.grid.total_volume)
                    * (data.fvals[node] / pm.max_factor).powf(p - 1.0)
                    * t;
                if sigma == 0.0 {
                    continue;
                }
                self.f.grad_packed(&data.d2[node * cs..(node + 1) * cs], self.dim, &mut grad_f);
                for c in 0..self.ncomp {
                    for k in 0..self.slen {
                        // off-diagonal pack slots pair against 2·D²u_xy
                        let doubling = if self.dim == 2 && k == 1 { 2.0 } else { 1.0 };
                        mult[node * cs + c * self.slen + k] =
                            sigma * doubling * grad_f[c * self.slen + k];
                    }
                }
            }
            self.ops.hessian_adjoint(&mult, self.ncomp, &mut full);
        }
        (norm, self.restrict(&full))
    }

    /// Norm G = ‖g(u, Du)‖_{L^p,w} and its gradient w.r.t. the interior dof.
    pub fn constraint_norm(&self, u: &GridField, data: &FieldData, p: f64) -> (f64, Vec<f64>) {
        let pm = weighted_power_mean(&data.gvals, p, self.grid);
        let norm = pm.norm();
        let n = self.grid.num_nodes();
        let mut full = vec![0.0; n * self.ncomp];
        if pm.max_factor > 0.0 {
            let t = (-(p - 1.0) / p * pm.mean_ratio.ln()).exp();
            let mut pmult = vec![0.0; n * self.ncomp * self.dim];
            let cd = self.ncomp * self.dim;
            let mut geta = vec![0.0; self.ncomp];
            let mut gp = vec![0.0; cd];
            for node in 0..n {
                let w = self.grid.cell_volumes[node];
                if w == 0.0 {
                    continue;
                }
                let tau = (w / self.grid.total_volume)
                    * (data.gvals[node] / pm.max_factor).powf(p - 1.0)
                    * t;
                if tau == 0.0 {
                    continue;
                }
                let eta = &u.values[node * self.ncomp..(node + 1) * self.ncomp];
                let pmat = &data.du[node * cd..(node + 1) * cd];
                self.g.grad_eta(eta, pmat, self.dim, &mut geta);
                self.g.grad_p(eta, pmat, self.dim, &mut gp);
                for c in 0..self.ncomp {
                    full[node * self.ncomp + c] += tau * geta[c];
                    for a in 0..self.dim {
                        pmult[node * cd + c * self.dim + a] = tau * gp[c * self.dim + a];
                    }
                }
            }
            self.ops.gradient_adjoint(&pmult, self.ncomp, &mut full);
        }
        (norm, self.restrict(&full))
    }
}

/// J_p = ⨍ f(D²u)^p in factored form, and its exact gradient d J_p w.r.t. the
/// interior dof (the raw p-power functional, used by finite-difference
/// checks; the raw gradient overflows for large p, prefer
/// [`Discretized::objective_norm`] inside solvers).
pub fn objective_and_gradient(
    model: &Discretized,
    u: &GridField,
    p: f64,
) -> Result<(PowerMean, Vec<f64>)> {
    if !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    let data = model.field_data(u);
    let (norm, grad_norm) = model.objective_norm(u, &data, p);
    // dJ = p * norm^{p-1} * dF
    let scale = p * norm.powf(p - 1.0);
    let grad = grad_norm.iter().map(|v| scale * v).collect();
    let pm = weighted_power_mean(&data.fvals, p, model.grid);
    Ok((pm, grad))
}

/// G_p = ⨍ g(u, Du)^p in factored form, and its exact gradient.
pub fn constraint_and_gradient(
    model: &Discretized,
    u: &GridField,
    p: f64,
) -> Result<(PowerMean, Vec<f64>)> {
    if !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    let data = model.field_data(u);
    let (norm, grad_norm) = model.constraint_norm(u, &data, p);
    let scale = p * norm.powf(p - 1.0);
    let grad = grad_norm.iter().map(|v| scale * v).collect();
    let pm = weighted_power_mean(&data.gvals, p, model.grid);
    Ok((pm, grad))
}

/// Solves the p-constrained problem from `init` (re-normalised internally).
pub fn solve_p(
    model: &Discretized,
    init: &GridField,
    p: f64,
    settings: &SolverSettings,
    warm: Option<WarmStart>,
) -> Result<PRunResult> {
    settings.validate()?;
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    let bc = init.bc;

    // warm start, then re-normalise onto the constraint manifold
    let norm_res =
        normalization::normalize(model.grid, model.ops, model.g, init, Exponent::Finite(p), 1e-12)?;
    let mut u = init.clone();
    u.scale(norm_res.t);
    u.enforce_bc(model.grid);

    let mut x = model.pack(&u);
    let data0 = model.field_data(&u);
    let (f0, _) = model.objective_norm(&u, &data0, p);
    let mut theta = warm.map(|w| w.theta).unwrap_or(f0);
    let mut penalty = warm.map(|w| w.penalty).unwrap_or_else(|| 10.0 * f0.max(1.0));
    penalty = penalty.max(1e-6);

    let mut total_inner = 0usize;
    let mut outer_done = 0usize;
    let mut prev_violation = f64::INFINITY;
    let mut converged = false;

    for outer in 0..settings.outer_iterations {
        // tighten the inner tolerance as the multiplier settles
        let gtol = (1e-4 * 0.1f64.powi(outer as i32)).max(settings.grad_tol);
        let opts = LbfgsOptions {
            memory: settings.lbfgs_memory,
            max_iterations: settings.inner_iterations,
            grad_rtol: gtol,
            f_floor: 1e-300,
        };
        let apply_pre = model
            .precond
            .as_ref()
            .map(|pre| move |v: &[f64], out: &mut [f64]| pre.apply_inverse(v, out));
        let out = lbfgs::minimize(
            x.clone(),
            |xs, grad| {
                let uu = model.unpack(xs, bc);
                let data = model.field_data(&uu);
                let (fv, gf) = model.objective_norm(&uu, &data, p);
                let (gv, gg) = model.constraint_norm(&uu, &data, p);
                let c = gv - 1.0;
                let lag = -theta + penalty * c;
                for i in 0..grad.len() {
                    grad[i] = gf[i] + lag * gg[i];
                }
                fv - theta * c + 0.5 * penalty * c * c
            },
            &opts,
            apply_pre.as_ref().map(|f| f as &dyn Fn(&[f64], &mut [f64])),
        );
        total_inner += out.iterations;
        x = out.x;
        outer_done = outer + 1;

        let uu = model.unpack(&x, bc);
        let data = model.field_data(&uu);
        let (gv, _) = model.constraint_norm(&uu, &data, p);
        let c = gv - 1.0;
        theta -= penalty * c;
        let violation = c.abs();
        let at_final_tol = gtol <= settings.grad_tol * (1.0 + 1e-12);
        // a line-search stall with the constraint at tolerance is the f64
        // stationarity floor: accept it
        if violation <= settings.constraint_tol && at_final_tol && (out.converged || out.stalled) {
            converged = true;
            break;
        }
        // grow the penalty only while the violation is meaningfully above
        // tolerance and failed to shrink 4x
        if violation > settings.constraint_tol && violation > 0.25 * prev_violation {
            penalty = (penalty * settings.penalty_growth).min(1e13);
        }
        prev_violation = violation;
    }

    let u_p = model.unpack(&x, bc);
    let data = model.field_data(&u_p);
    let (l_p, grad_f) = model.objective_norm(&u_p, &data, p);
    let (gv, grad_g) = model.constraint_norm(&u_p, &data, p);
    let constraint_residual = (gv - 1.0).abs();

    // Multiplier extraction: test the weak form with phi = u_p (the same
    // pairing that drives the multiplier sandwich). For homogeneous densities
    // the Euler identity makes this exact independently of how deep the inner
    // solve converged; a least-squares fit over all scalar multipliers backs
    // it up when the pairing degenerates.
    let pair_fu = dot(&grad_f, &x);
    let pair_gu = dot(&grad_g, &x);
    let gg = dot(&grad_g, &grad_g);
    let theta_ls = if pair_gu.abs() > 1e-12 * gg.sqrt().max(1e-300) {
        pair_fu / pair_gu
    } else if gg > 0.0 {
        dot(&grad_f, &grad_g) / gg
    } else {
        theta
    };
    if !(theta_ls > 0.0) {
        return Err(Error::NonPositiveMultiplier(theta_ls));
    }
    let ln_lambda = theta_ls.ln() + (p - 1.0) * l_p.ln();
    let eigenvalue = (ln_lambda / p).exp();

    let el = el_residual_from(model, &u_p, &data, p, theta_ls, l_p, settings.el_test_fields);

    let slack = 10.0 * el;
    let lo = (model.f.constants.c1 / model.g.constants.c8).powf(1.0 / p) * l_p;
    let hi = (model.f.constants.c2 / model.g.constants.c7).powf(1.0 / p) * l_p;
    let sandwich_ok =
        lo <= eigenvalue * (1.0 + slack) + 1e-12 && eigenvalue <= hi * (1.0 + slack) + 1e-12;

    Ok(PRunResult {
        p,
        u_p,
        ln_lambda_p: ln_lambda,
        lambda_p: ln_lambda.exp(),
        eigenvalue,
        l_p,
        theta: theta_ls,
        constraint_residual,
        el_residual: el,
        inner_iterations: total_inner,
        outer_iterations: outer_done,
        converged: converged && constraint_residual <= 10.0 * settings.constraint_tol,
        sandwich_ok,
        warm_start_scale: norm_res.t,
        warm: WarmStart { theta: theta_ls, penalty },
    })
}

/// Max over a basis of interior bump test fields of the scaled weak-form gap
///
/// |⨍ (f/L)^{p-1} ∂f : D²φ − θ ⨍ g^{p-1}(∂_η g·φ + ∂_P g : Dφ)| / scale,
///
/// the discrete Euler–Lagrange residual of the converged pair.
pub fn el_residual(model: &Discretized, result: &PRunResult, test_basis_size: usize) -> f64 {
    let data = model.field_data(&result.u_p);
    el_residual_from(
        model,
        &result.u_p,
        &data,
        result.p,
        result.theta,
        result.l_p,
        test_basis_size,
    )
}

fn el_residual_from(
    model: &Discretized,
    u: &GridField,
    data: &FieldData,
    p: f64,
    theta: f64,
    l_p: f64,
    test_basis_size: usize,
) -> f64 {
    let grid = model.grid;
    let n = grid.num_nodes();
    let dim = model.dim;
    let slen = model.slen;
    let ncomp = model.ncomp;
    let cs = ncomp * slen;
    let cd = ncomp * dim;

    if l_p == 0.0 {
        return f64::INFINITY;
    }

    // per-node factored weights shared across all test fields
    let ln_l = l_p.ln();
    let mut fpow = vec![0.0; n]; // (f_i / L_p)^{p-1}
    let mut gpow = vec![0.0; n]; // g_i^{p-1}
    let mut fgrad = vec![0.0; n * cs];
    let mut geta = vec![0.0; n * ncomp];
    let mut gp = vec![0.0; n * cd];
    let mut scale_terms = vec![0.0; n];
    for node in 0..n {
        let w = grid.cell_volumes[node];
        if w == 0.0 {
            continue;
        }
        let omega = w / grid.total_volume;
        if data.fvals[node] > 0.0 {
            fpow[node] = ((p - 1.0) * (data.fvals[node].ln() - ln_l)).exp();
        }
        if data.gvals[node] > 0.0 {
            gpow[node] = ((p - 1.0) * data.gvals[node].ln()).exp();
        }
        let mut gbuf = vec![0.0; cs];
        model.f.grad_packed(&data.d2[node * cs..(node + 1) * cs], dim, &mut gbuf);
        let grad_norm = crate::densities::sym_frob_sq(&gbuf, dim).sqrt();
        scale_terms[node] = omega * fpow[node] * grad_norm;
        fgrad[node * cs..(node + 1) * cs].copy_from_slice(&gbuf);
        let eta = &u.values[node * ncomp..(node + 1) * ncomp];
        let pmat = &data.du[node * cd..(node + 1) * cd];
        model.g.grad_eta(eta, pmat, dim, &mut geta[node * ncomp..(node + 1) * ncomp]);
        model.g.grad_p(eta, pmat, dim, &mut gp[node * cd..(node + 1) * cd]);
    }
    let lhs_scale = pairwise_sum(&scale_terms);

    let fields = test_basis_size.max(1);
    let mut worst = 0.0f64;
    for k in 0..fields {
        let phi = test_field(grid, ncomp, u.bc, k, fields);
        let d2phi = model.ops.hessian(grid, &phi);
        let dphi = model.ops.gradient(grid, &phi);

        let mut lhs_terms = vec![0.0; n];
        let mut rhs_terms = vec![0.0; n];
        let mut d2phi_max = 0.0f64;
        for i in 0..n {
            let w = grid.cell_volumes[i];
            if w == 0.0 {
                continue;
            }
            let omega = w / grid.total_volume;
            let d2slice = &d2phi[i * cs..(i + 1) * cs];
            let d2norm = crate::densities::sym_frob_sq(d2slice, dim).sqrt();
            if d2norm > d2phi_max {
                d2phi_max = d2norm;
            }
            if fpow[i] > 0.0 {
                lhs_terms[i] =
                    omega * fpow[i] * sym_inner(&fgrad[i * cs..(i + 1) * cs], d2slice, dim);
            }
            if gpow[i] > 0.0 {
                let mut pairing = 0.0;
                for c in 0..ncomp {
                    pairing += geta[i * ncomp + c] * phi.values[i * ncomp + c];
                    for a in 0..dim {
                        pairing += gp[i * cd + c * dim + a] * dphi[i * cd + c * dim + a];
                    }
                }
                rhs_terms[i] = omega * gpow[i] * pairing;
            }
        }
        let lhs = pairwise_sum(&lhs_terms);
        let rhs = theta * pairwise_sum(&rhs_terms);
        let scale = lhs_scale * d2phi_max + 1e-300;
        let res = (lhs - rhs).abs() / scale;
        if res > worst {
            worst = res;
        }
    }
    worst
}

/// The k-th discrete test field of a basis of `total` interior bumps:
/// single-node spikes alternate with smooth cos² caps, centres spread over
/// the interior, components cycling. The same basis drives the weak-form
/// residual and the measure-pairing residual, so their scales are
/// comparable.
pub fn test_field(grid: &GridSpec, ncomp: usize, bc: BcMode, k: usize, total: usize) -> GridField {
    let interior = &grid.interior;
    let node = interior[(k * interior.len()) / total.max(1)];
    let comp = (k / 2) % ncomp;
    let mut phi = GridField::zeros(grid, ncomp, bc);
    if k % 2 == 0 {
        phi.values[node * ncomp + comp] = 1.0;
    } else {
        // radial cos^2 cap of radius ~ extent/6 around the centre node
        let dim = grid.domain.dim;
        let center: Vec<f64> = grid.coord(node).to_vec();
        let extent = match grid.domain.kind {
            crate::geometry::DomainKind::Interval { a, b } => b - a,
            crate::geometry::DomainKind::Rectangle { ax, bx, ay, by } => (bx - ax).min(by - ay),
            crate::geometry::DomainKind::Disc { radius, .. } => 2.0 * radius,
        };
        let r = extent / 4.0;
        for i in 0..grid.num_nodes() {
            let x = grid.coord(i);
            let mut d2 = 0.0;
            for a in 0..dim {
                d2 += (x[a] - center[a]) * (x[a] - center[a]);
            }
            let d = d2.sqrt();
            if d < r {
                let c = (std::f64::consts::FRAC_PI_2 * d / r).cos();
                phi.values[i * ncomp + comp] = c * c;
            }
        }
        phi.enforce_bc(grid);
    }
    phi
}

/// Polynomial bubble initialiser in the admissible class: a product of
/// quadratics vanishing on the boundary (hinged), squared for the clamped
/// first-order condition. Component 0 carries the bubble.
pub fn bubble_init(grid: &GridSpec, ncomp: usize, bc: BcMode) -> GridField {
    let profile = |x: &[f64]| -> f64 {
        match grid.domain.kind {
            crate::geometry::DomainKind::Interval { a, b } => {
                let s = (x[0] - a) * (b - x[0]) * 4.0 / ((b - a) * (b - a));
                s.max(0.0)
            }
            crate::geometry::DomainKind::Rectangle { ax, bx, ay, by } => {
                let sx = (x[0] - ax) * (bx - x[0]) * 4.0 / ((bx - ax) * (bx - ax));
                let sy = (x[1] - ay) * (by - x[1]) * 4.0 / ((by - ay) * (by - ay));
                (sx * sy).max(0.0)
            }
            crate::geometry::DomainKind::Disc { center, radius } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                (1.0 - (dx * dx + dy * dy) / (radius * radius)).max(0.0)
            }
        }
    };
    let mut field = GridField::from_fn(grid, ncomp, bc, |x, c| {
        if c == 0 {
            let s = profile(x);
            match bc {
                BcMode::Hinged => s,
                BcMode::Clamped => s * s,
            }
        } else {
            0.0
        }
    });
    field.enforce_bc(grid);
    field
}

/// Nodes where f(D²u) attains at least `fraction` of its max (argmax set).
pub fn argmax_nodes(model: &Discretized, u: &GridField, fraction: f64) -> Vec<usize> {
    let data = model.field_data(u);
    let mut m = 0.0f64;
    for node in 0..model.grid.num_nodes() {
        if model.grid.node_state[node] != NodeState::Exterior && data.fvals[node] > m {
            m = data.fvals[node];
        }
    }
    (0..model.grid.num_nodes())
        .filter(|&i| {
            model.grid.node_state[i] != NodeState::Exterior && data.fvals[i] >= fraction * m
        })
        .collect()
}
