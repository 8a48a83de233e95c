//! The discrete parametric measures M_p and ν_p, their mass bounds, and the
//! measure-pairing residual of the limiting divergence system at finite p.
//!
//! At finite p both measures are absolutely continuous with node densities
//!
//! ```text
//! M_p = (1/|Ω|) (f(D²u_p)/Λ_p)^{p-1} ∂f(D²u_p) L^n⌞Ω,
//! ν_p = (1/|Ω|)  g(u_p, Du_p)^{p-1}            L^n⌞Ω,
//! ```
//!
//! and the pairing ∫ D²φ : dM_p = Λ_p ∫ (∂_η g·φ + ∂_P g : Dφ) dν_p is an
//! algebraic rewriting of the weak Euler–Lagrange system, so its residual
//! must track the solver's weak-form residual.

use serde::{Deserialize, Serialize};

use crate::densities::{sym_frob_sq, sym_inner, sym_len};
use crate::error::Error;
use crate::psolver::{test_field, Discretized, PRunResult};
use crate::util::pairwise_sum;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureKind {
    /// Nonnegative scalar cell-weight measure (ν_p).
    Scalar,
    /// Symmetric-tensor-valued cell-weight measure (M_p).
    Tensor,
}

/// A cell-weight measure: per-node density weights against the grid's
/// quadrature, plus the resulting total variation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub kind: MeasureKind,
    pub dim: usize,
    pub ncomp: usize,
    /// Scalar: one weight per node. Tensor: packed symmetric block per node.
    pub weights: Vec<f64>,
    /// Σ_i |weight_i| · w_i / |Ω| (Frobenius norm for tensor weights).
    pub total_variation: f64,
}

impl DiscreteMeasure {
    /// Pairing ⟨φ, ν⟩ = Σ_i φ(x_i) weight_i w_i / |Ω| for a scalar measure.
    pub fn pair_scalar(&self, grid: &crate::geometry::GridSpec, phi: &[f64]) -> f64 {
        assert_eq!(self.kind, MeasureKind::Scalar);
        let terms: Vec<f64> = (0..grid.num_nodes())
            .map(|i| phi[i] * self.weights[i] * grid.cell_volumes[i])
            .collect();
        pairwise_sum(&terms) / grid.total_volume
    }

    /// Pairing ⟨Φ, M⟩ = Σ_i Φ(x_i) : weight_i w_i / |Ω| for a tensor measure
    /// against a packed symmetric test tensor field.
    pub fn pair_tensor(&self, grid: &crate::geometry::GridSpec, phi: &[f64]) -> f64 {
        assert_eq!(self.kind, MeasureKind::Tensor);
        let bs = self.ncomp * sym_len(self.dim);
        let terms: Vec<f64> = (0..grid.num_nodes())
            .map(|i| {
                sym_inner(&phi[i * bs..(i + 1) * bs], &self.weights[i * bs..(i + 1) * bs], self.dim)
                    * grid.cell_volumes[i]
            })
            .collect();
        pairwise_sum(&terms) / grid.total_volume
    }
}

/// Assembles (M_p, ν_p) from a converged run. Node powers are computed in
/// log form, so no intermediate overflows occur for any p.
pub fn assemble_measures(
    model: &Discretized,
    result: &PRunResult,
) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    if !(result.eigenvalue > 0.0) || !result.eigenvalue.is_finite() {
        return Err(Error::InvariantViolated(format!(
            "measure assembly needs Lambda_p > 0, got {}",
            result.eigenvalue
        )));
    }
    let grid = model.grid;
    let dim = grid.domain.dim;
    let ncomp = model.ncomp;
    let slen = sym_len(dim);
    let n = grid.num_nodes();
    let p = result.p;
    let ln_lambda = result.eigenvalue.ln();

    let data = model.field_data(&result.u_p);
    let mut nu_w = vec![0.0; n];
    let mut m_w = vec![0.0; n * ncomp * slen];
    let mut nu_tv_terms = vec![0.0; n];
    let mut m_tv_terms = vec![0.0; n];
    let mut grad_f = vec![0.0; ncomp * slen];
    for node in 0..n {
        let w = grid.cell_volumes[node];
        if data.gvals[node] > 0.0 {
            nu_w[node] = ((p - 1.0) * data.gvals[node].ln()).exp();
        }
        if data.fvals[node] > 0.0 {
            let factor = ((p - 1.0) * (data.fvals[node].ln() - ln_lambda)).exp();
            model.f.grad_packed(
                &data.d2[node * ncomp * slen..(node + 1) * ncomp * slen],
                dim,
                &mut grad_f,
            );
            for k in 0..ncomp * slen {
                m_w[node * ncomp * slen + k] = factor * grad_f[k];
            }
            m_tv_terms[node] = factor * sym_frob_sq(&grad_f, dim).sqrt() * w;
        }
        nu_tv_terms[node] = nu_w[node] * w;
    }

    let nu = DiscreteMeasure {
        kind: MeasureKind::Scalar,
        dim,
        ncomp,
        weights: nu_w,
        total_variation: pairwise_sum(&nu_tv_terms) / grid.total_volume,
    };
    let m = DiscreteMeasure {
        kind: MeasureKind::Tensor,
        dim,
        ncomp,
        weights: m_w,
        total_variation: pairwise_sum(&m_tv_terms) / grid.total_volume,
    };
    Ok((m, nu))
}

/// Verdicts for the measure mass bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassBoundsReport {
    pub nu_mass: f64,
    pub nu_bound: f64,
    pub nu_ok: bool,
    pub m_mass: f64,
    pub m_bound: f64,
    pub m_ok: bool,
}

/// Checks ν_p(Ω̄) ≤ 1 + 1e-8 and the M_p total-variation bound
/// (C8/C1)^{1-1/p} (C5 (Λ_p + 1)^β + C6) with Λ_p substituted for Λ∞.
pub fn mass_bounds_report(
    model: &Discretized,
    m: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    result: &PRunResult,
) -> MassBoundsReport {
    let fc = model.f.constants;
    let gc = model.g.constants;
    let p = result.p;
    let nu_bound = 1.0 + 1e-8;
    let m_bound = (gc.c8 / fc.c1).powf(1.0 - 1.0 / p)
        * (fc.c5 * (result.eigenvalue + 1.0).powf(fc.beta) + fc.c6);
    let slack = 1e-8 * (1.0 + m_bound);
    MassBoundsReport {
        nu_mass: nu.total_variation,
        nu_bound,
        nu_ok: nu.total_variation <= nu_bound,
        m_mass: m.total_variation,
        m_bound,
        m_ok: m.total_variation <= m_bound + slack,
    }
}

/// Max over the shared test-field basis of the scaled gap in
/// ∫ D²φ : dM_p = Λ_p ∫ (∂_η g·φ + ∂_P g : Dφ) dν_p.
///
/// `lambda_override` substitutes a different Λ on the right-hand side
/// (diagnostics); `None` uses the converged eigenvalue.
pub fn pairing_residual(
    model: &Discretized,
    m: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    result: &PRunResult,
    test_basis_size: usize,
    lambda_override: Option<f64>,
) -> f64 {
    let grid = model.grid;
    let n = grid.num_nodes();
    let dim = grid.domain.dim;
    let ncomp = model.ncomp;
    let slen = sym_len(dim);
    let cs = ncomp * slen;
    let cd = ncomp * dim;
    let lambda = lambda_override.unwrap_or(result.eigenvalue);

    let data = model.field_data(&result.u_p);
    let mut geta = vec![0.0; n * ncomp];
    let mut gp = vec![0.0; n * cd];
    for node in 0..n {
        let eta = &result.u_p.values[node * ncomp..(node + 1) * ncomp];
        let pmat = &data.du[node * cd..(node + 1) * cd];
        model.g.grad_eta(eta, pmat, dim, &mut geta[node * ncomp..(node + 1) * ncomp]);
        model.g.grad_p(eta, pmat, dim, &mut gp[node * cd..(node + 1) * cd]);
    }

    let fields = test_basis_size.max(1);
    let mut worst = 0.0f64;
    for k in 0..fields {
        let phi = test_field(grid, ncomp, result.u_p.bc, k, fields);
        let d2phi = model.ops.hessian(grid, &phi);
        let dphi = model.ops.gradient(grid, &phi);

        let lhs = m.pair_tensor(grid, &d2phi);
        let mut rhs_terms = vec![0.0; n];
        let mut d2phi_max = 0.0f64;
        for i in 0..n {
            let d2norm = sym_frob_sq(&d2phi[i * cs..(i + 1) * cs], dim).sqrt();
            if d2norm > d2phi_max {
                d2phi_max = d2norm;
            }
            let w = grid.cell_volumes[i];
            if w == 0.0 || nu.weights[i] == 0.0 {
                continue;
            }
            let mut pairing = 0.0;
            for c in 0..ncomp {
                pairing += geta[i * ncomp + c] * phi.values[i * ncomp + c];
                for a in 0..dim {
                    pairing += gp[i * cd + c * dim + a] * dphi[i * cd + c * dim + a];
                }
            }
            rhs_terms[i] = nu.weights[i] * pairing * w;
        }
        let rhs = lambda * pairwise_sum(&rhs_terms) / grid.total_volume;
        // relative gap; the floor keeps test fields supported away from the
        // measure concentration commensurate with the weak-form residual
        let floor = 0.125 * m.total_variation * d2phi_max + 1e-300;
        let res = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(floor);
        if res > worst {
            worst = res;
        }
    }
    worst
}

/// Fraction of ν mass carried by nodes where g ≥ `fraction` · max g.
pub fn nu_concentration(
    model: &Discretized,
    nu: &DiscreteMeasure,
    result: &PRunResult,
    fraction: f64,
) -> f64 {
    let grid = model.grid;
    let data = model.field_data(&result.u_p);
    let gmax = data
        .gvals
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.cell_volumes[*i] > 0.0)
        .map(|(_, v)| *v)
        .fold(0.0f64, f64::max);
    if gmax == 0.0 || nu.total_variation == 0.0 {
        return 0.0;
    }
    let terms: Vec<f64> = (0..grid.num_nodes())
        .map(|i| {
            if data.gvals[i] >= fraction * gmax {
                nu.weights[i] * grid.cell_volumes[i]
            } else {
                0.0
            }
        })
        .collect();
    pairwise_sum(&terms) / grid.total_volume / nu.total_variation
}

/// One row of the weak-* convergence table: pairings of fixed test functions
/// against ν_p and M_p for one exponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakStarRow {
    pub p: f64,
    pub nu_pairings: Vec<f64>,
    pub m_pairings: Vec<f64>,
}

/// Pairs a fixed set of continuous test functions against the measures of
/// each continuation step; Cauchy differences across p witness the weak-*
/// convergence claim.
pub fn weakstar_trace(
    model: &Discretized,
    steps: &[(f64, DiscreteMeasure, DiscreteMeasure)],
    num_fields: usize,
) -> Vec<WeakStarRow> {
    let grid = model.grid;
    let n = grid.num_nodes();
    let dim = grid.domain.dim;
    let ncomp = model.ncomp;
    let slen = sym_len(dim);

    // fixed scalar test functions: 1, coordinates, a cosine ripple
    let scalar_fields: Vec<Vec<f64>> = (0..num_fields)
        .map(|k| {
            (0..n)
                .map(|i| {
                    let x = grid.coord(i);
                    match k % 4 {
                        0 => 1.0,
                        1 => x[0],
                        2 => (std::f64::consts::PI * (k as f64 / 2.0) * x[0]).cos(),
                        _ => {
                            if dim == 2 {
                                x[1]
                            } else {
                                x[0] * x[0]
                            }
                        }
                    }
                })
                .collect()
        })
        .collect();
    // fixed tensor test functions: scalar profile times a constant symmetric
    // direction per slot
    let tensor_fields: Vec<Vec<f64>> = (0..num_fields)
        .map(|k| {
            let mut t = vec![0.0; n * ncomp * slen];
            let slot = k % (ncomp * slen);
            for i in 0..n {
                t[i * ncomp * slen + slot] = scalar_fields[k][i];
            }
            t
        })
        .collect();

    steps
        .iter()
        .map(|(p, m, nu)| WeakStarRow {
            p: *p,
            nu_pairings: scalar_fields.iter().map(|phi| nu.pair_scalar(grid, phi)).collect(),
            m_pairings: tensor_fields.iter().map(|phi| m.pair_tensor(grid, phi)).collect(),
        })
        .collect()
}
