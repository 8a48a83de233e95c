//! Discrete differential operators, boundary-condition enforcement, and
//! overflow-safe rescaled L^p quadrature.
//!
//! All operators are assembled once per (grid, boundary mode) as explicit
//! stencil rows, so applying an operator and applying its exact adjoint walk
//! the same coefficient tables. Reductions use fixed-order pairwise summation,
//! which keeps every norm and inner product reproducible bit-for-bit.

use serde::{Deserialize, Serialize};

use crate::densities::sym_len;
use crate::error::Error;
use crate::geometry::{DomainKind, GridSpec, NodeState};
use crate::util::pairwise_sum;
use crate::Result;

/// Boundary condition mode of a discrete field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BcMode {
    /// u = 0 on ∂Ω, Du free.
    Hinged,
    /// u = 0 and Du = 0 on ∂Ω (ghost-node even reflection).
    Clamped,
}

/// A discrete map u: grid → R^N stored node-major (`values[node * ncomp + c]`).
///
/// Boundary and exterior nodes are pinned to zero; [`GridField::enforce_bc`]
/// re-applies the pin after arbitrary writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub ncomp: usize,
    pub bc: BcMode,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: &GridSpec, ncomp: usize, bc: BcMode) -> Self {
        GridField { ncomp, bc, values: vec![0.0; grid.num_nodes() * ncomp] }
    }

    /// Builds a field from a nodal function of the coordinates; boundary and
    /// exterior nodes are pinned to zero afterwards.
    pub fn from_fn(
        grid: &GridSpec,
        ncomp: usize,
        bc: BcMode,
        f: impl Fn(&[f64], usize) -> f64,
    ) -> Self {
        let mut field = Self::zeros(grid, ncomp, bc);
        for node in 0..grid.num_nodes() {
            let x = grid.coord(node);
            for c in 0..ncomp {
                field.values[node * ncomp + c] = f(x, c);
            }
        }
        field.enforce_bc(grid);
        field
    }

    /// Same as [`from_fn`](Self::from_fn) but leaves boundary values
    /// untouched. Used by tests that evaluate operators on fields that are
    /// not in the admissible class.
    pub fn from_fn_unconstrained(
        grid: &GridSpec,
        ncomp: usize,
        bc: BcMode,
        f: impl Fn(&[f64], usize) -> f64,
    ) -> Self {
        let mut field = Self::zeros(grid, ncomp, bc);
        for node in 0..grid.num_nodes() {
            let x = grid.coord(node);
            for c in 0..ncomp {
                field.values[node * ncomp + c] = f(x, c);
            }
        }
        for node in 0..grid.num_nodes() {
            if grid.node_state[node] == NodeState::Exterior {
                for c in 0..ncomp {
                    field.values[node * ncomp + c] = 0.0;
                }
            }
        }
        field
    }

    /// Zeroes boundary and exterior nodes.
    pub fn enforce_bc(&mut self, grid: &GridSpec) {
        for node in 0..grid.num_nodes() {
            if grid.node_state[node] != NodeState::Interior {
                for c in 0..self.ncomp {
                    self.values[node * self.ncomp + c] = 0.0;
                }
            }
        }
    }

    pub fn scale(&mut self, t: f64) {
        for v in &mut self.values {
            *v *= t;
        }
    }

    pub fn max_abs(&self) -> f64 {
        crate::util::max_abs(&self.values)
    }
}

/// Sparse stencil rows: one row of (column, coefficient) pairs per node.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilOp {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    coeffs: Vec<f64>,
}

impl StencilOp {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut coeffs = Vec::new();
        offsets.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                coeffs.push(v);
            }
            offsets.push(cols.len());
        }
        StencilOp { offsets, cols, coeffs }
    }

    pub fn num_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn row(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[node]..self.offsets[node + 1];
        self.cols[range.clone()].iter().copied().zip(self.coeffs[range].iter().copied())
    }

    /// out[node] = Σ_k coeff * src[col_k * stride + offset], for one component.
    pub fn apply_strided(
        &self,
        src: &[f64],
        src_offset: usize,
        src_stride: usize,
        dst: &mut [f64],
        dst_offset: usize,
        dst_stride: usize,
    ) {
        for node in 0..self.num_rows() {
            let mut acc = 0.0;
            for k in self.offsets[node]..self.offsets[node + 1] {
                acc += self.coeffs[k] * src[self.cols[k] * src_stride + src_offset];
            }
            dst[node * dst_stride + dst_offset] = acc;
        }
    }

    /// dst[col * stride + offset] += Σ_rows coeff * src[row]; the exact
    /// transpose of [`apply_strided`](Self::apply_strided).
    pub fn apply_adjoint_strided(
        &self,
        src: &[f64],
        src_offset: usize,
        src_stride: usize,
        dst: &mut [f64],
        dst_offset: usize,
        dst_stride: usize,
    ) {
        for node in 0..self.num_rows() {
            let s = src[node * src_stride + src_offset];
            if s == 0.0 {
                continue;
            }
            for k in self.offsets[node]..self.offsets[node + 1] {
                dst[self.cols[k] * dst_stride + dst_offset] += self.coeffs[k] * s;
            }
        }
    }
}

/// The assembled first- and second-derivative operators for one grid and
/// boundary mode.
#[derive(Debug, Clone)]
pub struct Operators {
    pub dim: usize,
    /// d/dx (, d/dy).
    pub d1: Vec<StencilOp>,
    /// d²/dx² (, d²/dy²).
    pub d2: Vec<StencilOp>,
    /// d²/dxdy, present for dim = 2; built by composing the axis stencils so
    /// the output is symmetric by construction.
    pub dxy: Option<StencilOp>,
}

enum EndRule {
    /// Second-order one-sided stencils at segment ends (hinged tensor grids).
    OneSided,
    /// Even-reflection ghost nodes (clamped tensor grids).
    Ghost,
    /// Shortley–Weller stencils with the zero trace imposed exactly on the
    /// curved boundary (disc grids): the segment-end rows interpolate through
    /// the circle intersection at distance θh outside the last inside node.
    Curved,
}

impl Operators {
    pub fn build(grid: &GridSpec, bc: BcMode) -> Result<Self> {
        let dim = grid.domain.dim;
        let rule = match (grid.domain.kind, bc) {
            (DomainKind::Disc { .. }, BcMode::Clamped) => {
                return Err(Error::InvalidGrid(
                    "clamped mode requires a tensor-product boundary (interval or rectangle)"
                        .into(),
                ))
            }
            (DomainKind::Disc { .. }, BcMode::Hinged) => EndRule::Curved,
            (_, BcMode::Hinged) => EndRule::OneSided,
            (_, BcMode::Clamped) => EndRule::Ghost,
        };

        let mut d1 = Vec::new();
        let mut d2 = Vec::new();
        for axis in 0..dim {
            let (r1, r2) = build_axis(grid, axis, &rule);
            d1.push(StencilOp::from_rows(r1));
            d2.push(StencilOp::from_rows(r2));
        }
        let dxy = if dim == 2 {
            // The mixed derivative composes an outer x-derivative with the
            // y-derivative field. On curved grids the inner d/dy rows are
            // valid at every inside node (they drop only the true zero trace),
            // but the outer derivative must not reference the circle: it uses
            // lattice-only one-sided rows at the run ends.
            let outer = match rule {
                EndRule::Curved => StencilOp::from_rows(build_outer_d1(grid, 0)),
                _ => d1[0].clone(),
            };
            Some(compose(&outer, &d1[1]))
        } else {
            None
        };
        Ok(Operators { dim, d1, d2, dxy })
    }

    /// Du per node, layout `[node * ncomp * dim + c * dim + axis]`.
    pub fn gradient(&self, grid: &GridSpec, field: &GridField) -> Vec<f64> {
        let ncomp = field.ncomp;
        let mut out = vec![0.0; grid.num_nodes() * ncomp * self.dim];
        for axis in 0..self.dim {
            for c in 0..ncomp {
                self.d1[axis].apply_strided(
                    &field.values,
                    c,
                    ncomp,
                    &mut out,
                    c * self.dim + axis,
                    ncomp * self.dim,
                );
            }
        }
        out
    }

    /// D²u per node in packed symmetric layout
    /// `[node * ncomp * sym_len + c * sym_len + k]` with pack `[xx]` (1-D) or
    /// `[xx, xy, yy]` (2-D).
    pub fn hessian(&self, grid: &GridSpec, field: &GridField) -> Vec<f64> {
        let ncomp = field.ncomp;
        let slen = sym_len(self.dim);
        let mut out = vec![0.0; grid.num_nodes() * ncomp * slen];
        for c in 0..ncomp {
            self.d2[0].apply_strided(&field.values, c, ncomp, &mut out, c * slen, ncomp * slen);
            if self.dim == 2 {
                self.dxy.as_ref().unwrap().apply_strided(
                    &field.values,
                    c,
                    ncomp,
                    &mut out,
                    c * slen + 1,
                    ncomp * slen,
                );
                self.d2[1].apply_strided(
                    &field.values,
                    c,
                    ncomp,
                    &mut out,
                    c * slen + 2,
                    ncomp * slen,
                );
            }
        }
        out
    }

    /// Adjoint of [`gradient`](Self::gradient): accumulates `Σ_axis d1ᵀ m`
    /// into a node-major field array.
    pub fn gradient_adjoint(&self, multipliers: &[f64], ncomp: usize, out: &mut [f64]) {
        for axis in 0..self.dim {
            for c in 0..ncomp {
                self.d1[axis].apply_adjoint_strided(
                    multipliers,
                    c * self.dim + axis,
                    ncomp * self.dim,
                    out,
                    c,
                    ncomp,
                );
            }
        }
    }

    /// Adjoint of [`hessian`](Self::hessian) against a packed multiplier field
    /// that already carries the off-diagonal double-count (the `xy` slot is
    /// paired with 2·D²u_xy).
    pub fn hessian_adjoint(&self, multipliers: &[f64], ncomp: usize, out: &mut [f64]) {
        let slen = sym_len(self.dim);
        for c in 0..ncomp {
            self.d2[0].apply_adjoint_strided(multipliers, c * slen, ncomp * slen, out, c, ncomp);
            if self.dim == 2 {
                self.dxy.as_ref().unwrap().apply_adjoint_strided(
                    multipliers,
                    c * slen + 1,
                    ncomp * slen,
                    out,
                    c,
                    ncomp,
                );
                self.d2[1].apply_adjoint_strided(
                    multipliers,
                    c * slen + 2,
                    ncomp * slen,
                    out,
                    c,
                    ncomp,
                );
            }
        }
    }
}

/// Builds the 1-D first/second derivative rows along `axis` for every node.
fn build_axis(
    grid: &GridSpec,
    axis: usize,
    rule: &EndRule,
) -> (Vec<Vec<(usize, f64)>>, Vec<Vec<(usize, f64)>>) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let n_nodes = grid.num_nodes();
    let h = grid.spacing[axis];
    let mut rows1 = vec![Vec::new(); n_nodes];
    let mut rows2 = vec![Vec::new(); n_nodes];

    let (lines, line_len): (Vec<Vec<usize>>, usize) = if axis == 0 {
        ((0..ny).map(|j| (0..nx).map(|i| grid.idx(i, j)).collect()).collect(), nx)
    } else {
        ((0..nx).map(|i| (0..ny).map(|j| grid.idx(i, j)).collect()).collect(), ny)
    };

    // curved grids build stencils over runs of unknowns (Interior); tensor
    // grids include the boundary carrier nodes in the runs
    let in_run = |node: usize| match rule {
        EndRule::Curved => grid.node_state[node] == NodeState::Interior,
        _ => grid.node_state[node] != NodeState::Exterior,
    };

    for line in &lines {
        let mut s = 0;
        while s < line_len {
            if !in_run(line[s]) {
                s += 1;
                continue;
            }
            let mut e = s;
            while e + 1 < line_len && in_run(line[e + 1]) {
                e += 1;
            }
            match rule {
                EndRule::Curved => {
                    let (tl, tr) = curved_offsets(grid, axis, line, s, e, h);
                    build_segment_curved(line, s, e, h, tl, tr, &mut rows1, &mut rows2);
                }
                _ => build_segment(line, s, e, h, rule, &mut rows1, &mut rows2),
            }
            s = e + 1;
        }
    }
    (rows1, rows2)
}

/// Lattice-only first-derivative rows along `axis` over inside runs:
/// central in the interior, one-sided at the ends. Used as the outer
/// derivative of the mixed stencil on curved grids.
fn build_outer_d1(grid: &GridSpec, axis: usize) -> Vec<Vec<(usize, f64)>> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let h = grid.spacing[axis];
    let inv_h = 1.0 / h;
    let mut rows = vec![Vec::new(); grid.num_nodes()];
    let (lines, line_len): (Vec<Vec<usize>>, usize) = if axis == 0 {
        ((0..ny).map(|j| (0..nx).map(|i| grid.idx(i, j)).collect()).collect(), nx)
    } else {
        ((0..nx).map(|i| (0..ny).map(|j| grid.idx(i, j)).collect()).collect(), ny)
    };
    for line in &lines {
        let mut s = 0;
        while s < line_len {
            if grid.node_state[line[s]] != NodeState::Interior {
                s += 1;
                continue;
            }
            let mut e = s;
            while e + 1 < line_len && grid.node_state[line[e + 1]] == NodeState::Interior {
                e += 1;
            }
            let len = e - s + 1;
            for k in s..=e {
                let node = line[k];
                if k > s && k < e {
                    rows[node] =
                        vec![(line[k - 1], -0.5 * inv_h), (line[k + 1], 0.5 * inv_h)];
                } else if len >= 3 {
                    let (sign, o0, o1, o2) = if k == s {
                        (1.0, line[k], line[k + 1], line[k + 2])
                    } else {
                        (-1.0, line[k], line[k - 1], line[k - 2])
                    };
                    rows[node] = vec![
                        (o0, -1.5 * inv_h * sign),
                        (o1, 2.0 * inv_h * sign),
                        (o2, -0.5 * inv_h * sign),
                    ];
                } else if len == 2 {
                    let (a, b) = (line[s], line[e]);
                    rows[node] = vec![(a, -inv_h), (b, inv_h)];
                }
                // isolated single node: no lattice derivative available
            }
            s = e + 1;
        }
    }
    rows
}

/// Distances (in units of h) from the ends of an inside run to the circle
/// along the grid line, clamped away from zero for stability.
fn curved_offsets(
    grid: &GridSpec,
    axis: usize,
    line: &[usize],
    s: usize,
    e: usize,
    h: f64,
) -> (f64, f64) {
    const THETA_MIN: f64 = 0.05;
    let (center, radius) = match grid.domain.kind {
        DomainKind::Disc { center, radius } => (center, radius),
        _ => unreachable!("curved offsets only apply to disc grids"),
    };
    let cs = grid.coord(line[s]);
    let ce = grid.coord(line[e]);
    let cross = if axis == 0 { cs[1] - center[1] } else { cs[0] - center[0] };
    let half = (radius * radius - cross * cross).max(0.0).sqrt();
    let (lo, hi) = if axis == 0 {
        (center[0] - half, center[0] + half)
    } else {
        (center[1] - half, center[1] + half)
    };
    let (vs, ve) = if axis == 0 { (cs[0], ce[0]) } else { (cs[1], ce[1]) };
    let tl = ((vs - lo) / h).clamp(THETA_MIN, 1.0);
    let tr = ((hi - ve) / h).clamp(THETA_MIN, 1.0);
    (tl, tr)
}

/// Quadratic-interpolation derivative rows through unequally spaced points.
/// `a < b < c` are abscissae relative to the evaluation point b; the value at
/// `a` (respectively `c`) may be the zero boundary trace, dropped from the row.
fn unequal_rows(
    za: f64,
    zc: f64,
    col_a: Option<usize>,
    col_b: usize,
    col_c: Option<usize>,
) -> (Vec<(usize, f64)>, Vec<(usize, f64)>) {
    // derivative and second derivative at z = 0 of the quadratic through
    // (za, ua), (0, ub), (zc, uc)
    let ca_1 = -zc / (za * (za - zc));
    let cb_1 = -(za + zc) / (za * zc);
    let cc_1 = -za / (zc * (zc - za));
    let ca_2 = 2.0 / (za * (za - zc));
    let cb_2 = 2.0 / (za * zc);
    let cc_2 = 2.0 / (zc * (zc - za));
    let mut r1 = Vec::new();
    let mut r2 = Vec::new();
    if let Some(a) = col_a {
        r1.push((a, ca_1));
        r2.push((a, ca_2));
    }
    r1.push((col_b, cb_1));
    r2.push((col_b, cb_2));
    if let Some(c) = col_c {
        r1.push((c, cc_1));
        r2.push((c, cc_2));
    }
    (r1, r2)
}

/// Shortley–Weller rows for a run of inside nodes with the zero trace at
/// distance θl·h left of node s and θr·h right of node e.
#[allow(clippy::too_many_arguments)]
fn build_segment_curved(
    line: &[usize],
    s: usize,
    e: usize,
    h: f64,
    theta_l: f64,
    theta_r: f64,
    rows1: &mut [Vec<(usize, f64)>],
    rows2: &mut [Vec<(usize, f64)>],
) {
    let id = |k: usize| line[k];
    let inv_h = 1.0 / h;
    let inv_h2 = inv_h * inv_h;
    for k in s..=e {
        let node = id(k);
        if k > s && k < e {
            rows1[node] = vec![(id(k - 1), -0.5 * inv_h), (id(k + 1), 0.5 * inv_h)];
            rows2[node] =
                vec![(id(k - 1), inv_h2), (id(k), -2.0 * inv_h2), (id(k + 1), inv_h2)];
            continue;
        }
        let left_boundary = k == s;
        let right_boundary = k == e;
        let (r1, r2) = match (left_boundary, right_boundary) {
            (true, true) => unequal_rows(-theta_l * h, theta_r * h, None, node, None),
            (true, false) => unequal_rows(-theta_l * h, h, None, node, Some(id(k + 1))),
            (false, true) => unequal_rows(-h, theta_r * h, Some(id(k - 1)), node, None),
            (false, false) => unreachable!(),
        };
        rows1[node] = r1;
        rows2[node] = r2;
    }
}

fn build_segment(
    line: &[usize],
    s: usize,
    e: usize,
    h: f64,
    rule: &EndRule,
    rows1: &mut [Vec<(usize, f64)>],
    rows2: &mut [Vec<(usize, f64)>],
) {
    let len = e - s + 1;
    let id = |k: usize| line[k];
    let inv_h = 1.0 / h;
    let inv_h2 = inv_h * inv_h;

    for k in s..=e {
        let node = id(k);
        let interior = k > s && k < e;
        if interior {
            rows1[node] = vec![(id(k - 1), -0.5 * inv_h), (id(k + 1), 0.5 * inv_h)];
            rows2[node] =
                vec![(id(k - 1), inv_h2), (id(k), -2.0 * inv_h2), (id(k + 1), inv_h2)];
            continue;
        }
        let left_end = k == s;
        match rule {
            EndRule::OneSided => {
                // second-order one-sided formulas; tensor grids guarantee
                // at least 5 nodes per line
                assert!(len >= 4, "one-sided stencils need at least 4 nodes per segment");
                let (a, b, c, d) = if left_end {
                    (id(k), id(k + 1), id(k + 2), if len > 3 { id(k + 3) } else { id(k + 2) })
                } else {
                    (id(k), id(k - 1), id(k - 2), id(k - 3))
                };
                let sign = if left_end { 1.0 } else { -1.0 };
                rows1[node] = vec![
                    (a, -1.5 * inv_h * sign),
                    (b, 2.0 * inv_h * sign),
                    (c, -0.5 * inv_h * sign),
                ];
                rows2[node] = vec![
                    (a, 2.0 * inv_h2),
                    (b, -5.0 * inv_h2),
                    (c, 4.0 * inv_h2),
                    (d, -1.0 * inv_h2),
                ];
            }
            EndRule::Ghost => {
                // even reflection across the boundary node: Du = 0 there and
                // the second difference folds onto the inward neighbour
                rows1[node] = Vec::new();
                let nb = if left_end { id(k + 1) } else { id(k - 1) };
                rows2[node] = vec![(id(k), -2.0 * inv_h2), (nb, 2.0 * inv_h2)];
            }
            EndRule::Curved => unreachable!("curved segments are built separately"),
        }
    }
}

/// Row-composition `a ∘ b` (apply `b`, then `a`), used for the mixed
/// derivative. Duplicate columns merge in sorted order, so the result is
/// deterministic.
fn compose(a: &StencilOp, b: &StencilOp) -> StencilOp {
    let mut rows = Vec::with_capacity(a.num_rows());
    for node in 0..a.num_rows() {
        let mut acc: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for (mid, ca) in a.row(node) {
            for (col, cb) in b.row(mid) {
                *acc.entry(col).or_insert(0.0) += ca * cb;
            }
        }
        rows.push(acc.into_iter().collect());
    }
    StencilOp::from_rows(rows)
}

/// Factored representation of a weighted power mean `(⨍ |h|^p)`:
/// `mean = max_factor^p * mean_ratio` with `mean_ratio = ⨍ (|h|/max)^p ∈ (0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerMean {
    pub max_factor: f64,
    pub mean_ratio: f64,
    pub p: f64,
}

impl PowerMean {
    /// The rescaled norm `(⨍ |h|^p)^{1/p} = max_factor * mean_ratio^{1/p}`.
    pub fn norm(&self) -> f64 {
        if self.max_factor == 0.0 {
            0.0
        } else {
            self.max_factor * self.mean_ratio.powf(1.0 / self.p)
        }
    }

    /// ln of the mean `⨍ |h|^p`; `-inf` for the zero field.
    pub fn ln_mean(&self) -> f64 {
        if self.max_factor == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.p * self.max_factor.ln() + self.mean_ratio.ln()
        }
    }

    /// The raw mean `⨍ |h|^p`; overflows to `inf` when not representable.
    pub fn mean(&self) -> f64 {
        if self.max_factor == 0.0 {
            0.0
        } else {
            self.ln_mean().exp()
        }
    }
}

/// Weighted power mean of `|values|` over the grid's quadrature weights in
/// max-factored form. Nodes with zero weight are excluded.
pub fn weighted_power_mean(values: &[f64], p: f64, grid: &GridSpec) -> PowerMean {
    assert_eq!(values.len(), grid.num_nodes());
    let w = &grid.cell_volumes;
    let mut m = 0.0f64;
    for i in 0..values.len() {
        if w[i] > 0.0 {
            let a = values[i].abs();
            if a > m {
                m = a;
            }
        }
    }
    if m == 0.0 {
        return PowerMean { max_factor: 0.0, mean_ratio: 0.0, p };
    }
    // Terms stay aligned with the weight array (zeros in place) so that the
    // pairwise tree matches the one that produced total_volume; a constant
    // field then yields mean_ratio == 1 exactly.
    let terms: Vec<f64> =
        (0..values.len()).map(|i| if w[i] > 0.0 { w[i] * (values[i].abs() / m).powf(p) } else { 0.0 }).collect();
    let ratio = pairwise_sum(&terms) / grid.total_volume;
    PowerMean { max_factor: m, mean_ratio: ratio, p }
}

/// Result of a rescaled L^p quadrature in factored form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    /// The rescaled norm `( ⨍ |h|^p )^{1/p}`.
    pub value: f64,
    /// The factored scale m = max over quadrature nodes of |h|.
    pub max_factor: f64,
    /// ln of the mean `⨍ |h|^p`.
    pub log_mean: f64,
}

/// Rescaled L^p norm `( (1/|Ω|) ∫ |h|^p )^{1/p}` computed in max-factored
/// form; safe for p up to 10⁴ and beyond.
pub fn lp_mean_norm(values: &[f64], p: f64, grid: &GridSpec) -> Result<QuadratureResult> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let pm = weighted_power_mean(values, p, grid);
    Ok(QuadratureResult { value: pm.norm(), max_factor: pm.max_factor, log_mean: pm.ln_mean() })
}

/// Discrete L∞ norm: max over non-exterior nodes of |h|.
pub fn linf_norm(values: &[f64], grid: &GridSpec) -> f64 {
    let mut m = 0.0f64;
    for i in 0..values.len() {
        if grid.node_state[i] != NodeState::Exterior {
            let a = values[i].abs();
            if a > m {
                m = a;
            }
        }
    }
    m
}
