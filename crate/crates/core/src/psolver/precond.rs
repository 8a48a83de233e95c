//! Banded SPD preconditioner for the inner quasi-Newton solves.
//!
//! The p-energies behave like powers of ‖D²u‖, so their Hessians share the
//! spectrum of the weighted bilaplacian Gram matrix
//! B = Σ_ops opᵀ diag(ω) op (+ δ diag regularisation). Using B⁻¹ as the
//! initial L-BFGS metric removes the h⁻⁴ grid stiffness that otherwise
//! stalls the line search long before the multiplier tolerances are met.
//!
//! B couples only nodes within stencil distance, so it is banded under the
//! row-major interior ordering; one banded Cholesky factorisation per solve
//! makes applications O(bandwidth · n).

use crate::densities::sym_len;
use crate::discretization::Operators;
use crate::geometry::{GridSpec, NodeState};

/// Lower-banded SPD matrix with in-place Cholesky factors.
pub struct BandedPreconditioner {
    n: usize,
    bandwidth: usize,
    /// Row-major lower band: entry (i, j) with i-j <= bandwidth stored at
    /// [i * (bandwidth+1) + (bandwidth - (i - j))].
    factor: Vec<f64>,
    ncomp: usize,
}

impl BandedPreconditioner {
    /// Assembles B over the interior dofs of one component and factorises it.
    pub fn build(grid: &GridSpec, ops: &Operators) -> Option<Self> {
        let interior = &grid.interior;
        let n = interior.len();
        if n == 0 {
            return None;
        }
        let mut dof_of_node = vec![usize::MAX; grid.num_nodes()];
        for (k, &node) in interior.iter().enumerate() {
            dof_of_node[node] = k;
        }

        // gather (dof_a, dof_b, value) contributions and the bandwidth
        let slen = sym_len(ops.dim);
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut bandwidth = 0usize;
        {
            let mut add_op = |op: &crate::discretization::StencilOp, weight: f64| {
                for node in 0..grid.num_nodes() {
                    let w = grid.cell_volumes[node];
                    if w == 0.0 || grid.node_state[node] == NodeState::Exterior {
                        continue;
                    }
                    let row: Vec<(usize, f64)> = op
                        .row(node)
                        .filter_map(|(col, c)| {
                            let d = dof_of_node[col];
                            (d != usize::MAX).then_some((d, c))
                        })
                        .collect();
                    for &(da, ca) in &row {
                        for &(db, cb) in &row {
                            if db > da {
                                continue;
                            }
                            let band = da - db;
                            if band > bandwidth {
                                bandwidth = band;
                            }
                            triplets.push((da, db, weight * w * ca * cb));
                        }
                    }
                }
            };
            add_op(&ops.d2[0], 1.0);
            if ops.dim == 2 {
                add_op(&ops.d2[1], 1.0);
                // the xy slot enters the Frobenius pairing twice
                add_op(ops.dxy.as_ref().unwrap(), 2.0);
            }
            let _ = slen;
        }

        let stride = bandwidth + 1;
        let mut band = vec![0.0; n * stride];
        for (i, j, v) in triplets {
            band[i * stride + (bandwidth - (i - j))] += v;
        }
        // diagonal regularisation keeps the factorisation positive definite
        let mut diag_scale = 0.0f64;
        for i in 0..n {
            diag_scale = diag_scale.max(band[i * stride + bandwidth]);
        }
        let shift = 1e-12 * diag_scale.max(1e-300);
        for i in 0..n {
            band[i * stride + bandwidth] += shift;
        }

        // banded Cholesky (LLᵀ)
        for i in 0..n {
            let start = i.saturating_sub(bandwidth);
            for j in start..=i {
                let mut sum = band[i * stride + bandwidth - (i - j)];
                let kmin = start.max(j.saturating_sub(bandwidth));
                for k in kmin..j {
                    sum -= band[i * stride + bandwidth - (i - k)]
                        * band[j * stride + bandwidth - (j - k)];
                }
                if i == j {
                    if sum <= 0.0 {
                        return None;
                    }
                    band[i * stride + bandwidth] = sum.sqrt();
                } else {
                    band[i * stride + bandwidth - (i - j)] =
                        sum / band[j * stride + bandwidth];
                }
            }
        }
        Some(BandedPreconditioner { n, bandwidth, factor: band, ncomp: 1 })
    }

    pub fn with_components(mut self, ncomp: usize) -> Self {
        self.ncomp = ncomp;
        self
    }

    /// out = B⁻¹ v, applied per component (dof layout `[k * ncomp + c]`).
    pub fn apply_inverse(&self, v: &[f64], out: &mut [f64]) {
        let stride = self.bandwidth + 1;
        debug_assert_eq!(v.len(), self.n * self.ncomp);
        let mut rhs = vec![0.0; self.n];
        for c in 0..self.ncomp {
            for k in 0..self.n {
                rhs[k] = v[k * self.ncomp + c];
            }
            // forward substitution L y = rhs
            for i in 0..self.n {
                let start = i.saturating_sub(self.bandwidth);
                let mut sum = rhs[i];
                for j in start..i {
                    sum -= self.factor[i * stride + self.bandwidth - (i - j)] * rhs[j];
                }
                rhs[i] = sum / self.factor[i * stride + self.bandwidth];
            }
            // backward substitution Lᵀ x = y
            for i in (0..self.n).rev() {
                let mut sum = rhs[i];
                let end = (i + self.bandwidth).min(self.n - 1);
                for j in i + 1..=end {
                    sum -= self.factor[j * stride + self.bandwidth - (j - i)] * rhs[j];
                }
                rhs[i] = sum / self.factor[i * stride + self.bandwidth];
            }
            for k in 0..self.n {
                out[k * self.ncomp + c] = rhs[k];
            }
        }
    }
}
