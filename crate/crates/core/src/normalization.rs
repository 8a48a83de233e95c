//! Constraint normalisation: given a nonzero candidate field v and an
//! exponent p (finite or ∞), find t_p > 0 with ‖g(t_p v, t_p Dv)‖_{L^p} = 1.
//!
//! The map t ↦ ‖g(tv, tDv)‖_{L^p} is strictly increasing (radial monotonicity
//! of g), so a bracketing bisection always succeeds for coercive data. When g
//! is k-homogeneous the root has the closed form
//! t_p = ‖g(v, Dv)‖_{L^p}^{-1/k}.

use serde::{Deserialize, Serialize};

use crate::densities::DensityG;
use crate::discretization::{linf_norm, lp_mean_norm, GridField, Operators};
use crate::error::Error;
use crate::geometry::GridSpec;
use crate::Result;

/// Exponent of the norm used in the normalisation: finite p or the sup norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn as_f64(&self) -> f64 {
        match self {
            Exponent::Finite(p) => *p,
            Exponent::Infinity => f64::INFINITY,
        }
    }
}

/// Outcome of a normalisation solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationResult {
    /// The scaling t_p > 0 with ‖g(t_p v, t_p Dv)‖_{L^p} = 1.
    pub t: f64,
    /// |‖g(t v, t Dv)‖_{L^p} − 1| at the returned t.
    pub residual: f64,
    /// Final bisection bracket (t_lo, t_hi); collapsed for the closed form.
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Default tolerance on t.
pub const DEFAULT_T_TOL: f64 = 1e-10;

/// Evaluates ρ_p(t) = ‖g(t v, t Dv)‖_{L^p} (the norm, not its p-th power;
/// p = ∞ uses the nodal max).
pub fn rho(
    grid: &GridSpec,
    g: &DensityG,
    v: &GridField,
    dv: &[f64],
    p: Exponent,
    t: f64,
) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidExponent(t));
    }
    let field = constraint_field(grid, g, v, dv, t);
    match p {
        Exponent::Finite(pf) => Ok(lp_mean_norm(&field, pf, grid)?.value),
        Exponent::Infinity => Ok(linf_norm(&field, grid)),
    }
}

/// Convenience wrapper that derives Dv internally.
pub fn rho_of_field(
    grid: &GridSpec,
    ops: &Operators,
    g: &DensityG,
    v: &GridField,
    p: Exponent,
    t: f64,
) -> Result<f64> {
    let dv = ops.gradient(grid, v);
    rho(grid, g, v, &dv, p, t)
}

/// Per-node values of g(t v, t Dv).
fn constraint_field(grid: &GridSpec, g: &DensityG, v: &GridField, dv: &[f64], t: f64) -> Vec<f64> {
    let ncomp = v.ncomp;
    let dim = grid.domain.dim;
    let n = grid.num_nodes();
    let mut out = vec![0.0; n];
    let mut eta = vec![0.0; ncomp];
    let mut pmat = vec![0.0; ncomp * dim];
    for node in 0..n {
        for c in 0..ncomp {
            eta[c] = t * v.values[node * ncomp + c];
            for a in 0..dim {
                pmat[c * dim + a] = t * dv[node * ncomp * dim + c * dim + a];
            }
        }
        out[node] = g.eval(&eta, &pmat, dim);
    }
    out
}

/// Finds t with ‖g(t v, t Dv)‖_{L^p} = 1.
///
/// Uses the homogeneity shortcut when available, otherwise bracketing
/// bisection from t = 1 (the map is strictly increasing but not smooth in t
/// at p = ∞, so Newton is avoided).
pub fn normalize(
    grid: &GridSpec,
    ops: &Operators,
    g: &DensityG,
    v: &GridField,
    p: Exponent,
    tol: f64,
) -> Result<NormalizationResult> {
    let dv = ops.gradient(grid, v);
    if v.max_abs() == 0.0 && crate::util::max_abs(&dv) == 0.0 {
        return Err(Error::ZeroField);
    }
    if let Some(k) = g.homogeneity {
        let base = rho(grid, g, v, &dv, p, 1.0)?;
        if !(base > 0.0) {
            return Err(Error::ZeroField);
        }
        let t = base.powf(-1.0 / k);
        let residual = (rho(grid, g, v, &dv, p, t)? - 1.0).abs();
        return Ok(NormalizationResult { t, residual, bracket: (t, t), iterations: 0 });
    }
    normalize_bisect(grid, ops, g, v, p, tol)
}

/// Bisection path, exposed separately so the homogeneity shortcut can be
/// cross-checked against it.
pub fn normalize_bisect(
    grid: &GridSpec,
    ops: &Operators,
    g: &DensityG,
    v: &GridField,
    p: Exponent,
    tol: f64,
) -> Result<NormalizationResult> {
    let dv = ops.gradient(grid, v);
    if v.max_abs() == 0.0 && crate::util::max_abs(&dv) == 0.0 {
        return Err(Error::ZeroField);
    }
    let eval = |t: f64| rho(grid, g, v, &dv, p, t);

    // bracket by doubling / halving from t = 1
    let mut t_lo;
    let mut t_hi;
    let r1 = eval(1.0)?;
    if r1 == 1.0 {
        return Ok(NormalizationResult { t: 1.0, residual: 0.0, bracket: (1.0, 1.0), iterations: 0 });
    }
    let mut steps = 0usize;
    if r1 > 1.0 {
        t_hi = 1.0;
        t_lo = 0.5;
        while eval(t_lo)? > 1.0 {
            t_lo *= 0.5;
            steps += 1;
            if steps > 200 {
                return Err(Error::BracketNotFound(steps));
            }
        }
    } else {
        t_lo = 1.0;
        t_hi = 2.0;
        while eval(t_hi)? < 1.0 {
            t_hi *= 2.0;
            steps += 1;
            if steps > 200 {
                return Err(Error::BracketNotFound(steps));
            }
        }
    }

    let mut iterations = 0usize;
    let mut mid;
    loop {
        mid = 0.5 * (t_lo + t_hi);
        let r = eval(mid)?;
        if r > 1.0 {
            t_hi = mid;
        } else {
            t_lo = mid;
        }
        iterations += 1;
        if t_hi - t_lo <= tol * t_hi.max(1e-300) || iterations >= 200 {
            break;
        }
    }
    mid = 0.5 * (t_lo + t_hi);
    let residual = (eval(mid)? - 1.0).abs();
    Ok(NormalizationResult { t: mid, residual, bracket: (t_lo, t_hi), iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::DensityG;
    use crate::discretization::BcMode;
    use crate::geometry::{build_grid, DomainKind, DomainSpec};

    fn setup(n: usize) -> (GridSpec, Operators) {
        let dom = DomainSpec::new(DomainKind::Interval { a: 0.0, b: 1.0 }, 1).unwrap();
        let grid = build_grid(&dom, n).unwrap();
        let ops = Operators::build(&grid, BcMode::Hinged).unwrap();
        (grid, ops)
    }

    fn bubble(grid: &GridSpec) -> GridField {
        GridField::from_fn(grid, 1, BcMode::Hinged, |x, _| 4.0 * x[0] * (1.0 - x[0]))
    }

    #[test]
    fn rho_vanishes_at_zero() {
        let (grid, ops) = setup(51);
        let g = DensityG::eta_power(2.0).unwrap();
        let v = bubble(&grid);
        for p in [Exponent::Finite(4.0), Exponent::Infinity] {
            assert_eq!(rho_of_field(&grid, &ops, &g, &v, p, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn rho_scales_with_homogeneity() {
        let (grid, ops) = setup(51);
        let g = DensityG::eta_power(2.0).unwrap();
        let v = bubble(&grid);
        let p = Exponent::Finite(8.0);
        let r1 = rho_of_field(&grid, &ops, &g, &v, p, 0.7).unwrap();
        let r2 = rho_of_field(&grid, &ops, &g, &v, p, 1.4).unwrap();
        assert!((r2 - 4.0 * r1).abs() < 1e-12 * r2);
    }

    #[test]
    fn rho_strictly_increasing_on_scan() {
        let (grid, ops) = setup(51);
        let g = DensityG::eta_quad_quartic();
        let v = bubble(&grid);
        let p = Exponent::Finite(6.0);
        let mut prev = 0.0;
        for k in 1..=60 {
            let t = 0.1 * k as f64;
            let r = rho_of_field(&grid, &ops, &g, &v, p, t).unwrap();
            assert!(r > prev, "t={t}");
            prev = r;
        }
    }

    #[test]
    fn homogeneous_shortcut() {
        let (grid, ops) = setup(101);
        let g = DensityG::eta_power(2.0).unwrap();
        // scale the bubble so that ||g(v, Dv)||_p = 4; then t_p = 0.5
        let p = Exponent::Finite(6.0);
        let mut v = bubble(&grid);
        let base = rho_of_field(&grid, &ops, &g, &v, p, 1.0).unwrap();
        v.scale((4.0 / base).sqrt());
        let res = normalize(&grid, &ops, &g, &v, p, DEFAULT_T_TOL).unwrap();
        assert!((res.t - 0.5).abs() < 1e-12, "{}", res.t);
        assert!(res.residual <= 1e-10);
    }

    #[test]
    fn constant_constraint_field_gives_t_one_for_every_p() {
        let (grid, ops) = setup(41);
        let g = DensityG::eta_power(2.0).unwrap();
        // v == 1 everywhere: g(v, Dv) == 1 (gradient vanishes identically)
        let v = GridField::from_fn_unconstrained(&grid, 1, BcMode::Hinged, |_, _| 1.0);
        for p in [Exponent::Finite(4.0), Exponent::Finite(64.0), Exponent::Infinity] {
            let res = normalize(&grid, &ops, &g, &v, p, DEFAULT_T_TOL).unwrap();
            assert!((res.t - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bisection_matches_dense_scan_oracle() {
        let (grid, ops) = setup(101);
        let g = DensityG::eta_quad_quartic();
        let v = bubble(&grid);
        let p = Exponent::Finite(8.0);
        let res = normalize(&grid, &ops, &g, &v, p, DEFAULT_T_TOL).unwrap();

        // dense-scan oracle: locate the unit crossing on a fine t-grid, then
        // refine by scanning inside the bracketing cell
        let dv = ops.gradient(&grid, &v);
        let mut lo = 0.0;
        let mut hi = 4.0;
        for _ in 0..8 {
            let mut t_prev = lo;
            let mut found = hi;
            for k in 0..=1000 {
                let t = lo + (hi - lo) * k as f64 / 1000.0;
                if rho(&grid, &g, &v, &dv, p, t).unwrap() >= 1.0 {
                    found = t;
                    break;
                }
                t_prev = t;
            }
            lo = t_prev;
            hi = found;
        }
        let oracle = 0.5 * (lo + hi);
        assert!((res.t - oracle).abs() <= 1e-8, "bisect {} vs scan {}", res.t, oracle);
    }

    #[test]
    fn shortcut_agrees_with_bisection() {
        let (grid, ops) = setup(101);
        let g = DensityG::eta_power(4.0).unwrap();
        let v = bubble(&grid);
        let p = Exponent::Finite(16.0);
        let short = normalize(&grid, &ops, &g, &v, p, DEFAULT_T_TOL).unwrap();
        let bis = normalize_bisect(&grid, &ops, &g, &v, p, DEFAULT_T_TOL).unwrap();
        assert!((short.t - bis.t).abs() <= 1e-9 * short.t);
    }

    #[test]
    fn t_p_converges_to_t_infinity_monotonically() {
        let (grid, ops) = setup(101);
        let g = DensityG::eta_quad_quartic();
        let v = bubble(&grid);
        let t_inf = normalize(&grid, &ops, &g, &v, Exponent::Infinity, DEFAULT_T_TOL).unwrap().t;
        let mut prev_gap = f64::INFINITY;
        for p in [4.0, 16.0, 64.0, 256.0, 1024.0] {
            let t = normalize(&grid, &ops, &g, &v, Exponent::Finite(p), DEFAULT_T_TOL).unwrap().t;
            let gap = (t - t_inf).abs();
            assert!(gap <= prev_gap + 1e-12, "p={p}: gap {gap} grew from {prev_gap}");
            prev_gap = gap;
        }
    }

    #[test]
    fn zero_field_rejected() {
        let (grid, ops) = setup(21);
        let g = DensityG::eta_power(2.0).unwrap();
        let v = GridField::zeros(&grid, 1, BcMode::Hinged);
        assert!(matches!(
            normalize(&grid, &ops, &g, &v, Exponent::Finite(4.0), DEFAULT_T_TOL),
            Err(Error::ZeroField)
        ));
    }

    #[test]
    fn bracket_straddles_unity() {
        let (grid, ops) = setup(51);
        let g = DensityG::eta_quad_quartic();
        let v = bubble(&grid);
        let p = Exponent::Finite(12.0);
        let res = normalize_bisect(&grid, &ops, &g, &v, p, DEFAULT_T_TOL).unwrap();
        let dv = ops.gradient(&grid, &v);
        assert!(rho(&grid, &g, &v, &dv, p, res.bracket.0).unwrap() <= 1.0 + 1e-12);
        assert!(rho(&grid, &g, &v, &dv, p, res.bracket.1).unwrap() >= 1.0 - 1e-12);
    }
}
