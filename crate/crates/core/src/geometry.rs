//! Computational domains Ω ⊂ R^n (n ∈ {1,2}), their grids and geometric
//! descriptors.
//!
//! Three domain shapes are supported: an interval, an axis-aligned rectangle
//! and a disc. Grids are uniform tensor grids; the disc is carried on a tensor
//! grid clipped by the level set |x−c| ≤ R with cut-cell quadrature weights.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Shape of the domain Ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DomainKind {
    /// Ω = (a, b) ⊂ R.
    Interval { a: f64, b: f64 },
    /// Ω = (ax, bx) × (ay, by) ⊂ R².
    Rectangle { ax: f64, bx: f64, ay: f64, by: f64 },
    /// Ω = { x ∈ R² : |x − center| < radius }.
    Disc { center: [f64; 2], radius: f64 },
}

/// A validated domain together with the target dimension N of the maps
/// u: Ω → R^N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Spatial dimension n ∈ {1, 2}.
    pub dim: usize,
    /// Target dimension N ≥ 1.
    pub target_dim: usize,
}

impl DomainSpec {
    pub fn new(kind: DomainKind, target_dim: usize) -> Result<Self> {
        if target_dim == 0 {
            return Err(Error::InvalidDomain("target dimension N must be >= 1".into()));
        }
        let dim = match kind {
            DomainKind::Interval { a, b } => {
                if !(b > a) || !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidDomain(format!(
                        "interval needs b > a, got a={a}, b={b}"
                    )));
                }
                1
            }
            DomainKind::Rectangle { ax, bx, ay, by } => {
                if !(bx > ax) || !(by > ay) {
                    return Err(Error::InvalidDomain(
                        "rectangle needs bx > ax and by > ay".into(),
                    ));
                }
                2
            }
            DomainKind::Disc { radius, center } => {
                if !(radius > 0.0) || !center.iter().all(|c| c.is_finite()) {
                    return Err(Error::InvalidDomain("disc needs radius > 0".into()));
                }
                2
            }
        };
        Ok(DomainSpec { kind, dim, target_dim })
    }

    /// Lebesgue measure L^n(Ω).
    pub fn measure(&self) -> f64 {
        match self.kind {
            DomainKind::Interval { a, b } => b - a,
            DomainKind::Rectangle { ax, bx, ay, by } => (bx - ax) * (by - ay),
            DomainKind::Disc { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }

    /// True if x lies in the closed domain.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self.kind {
            DomainKind::Interval { a, b } => x[0] >= a && x[0] <= b,
            DomainKind::Rectangle { ax, bx, ay, by } => {
                x[0] >= ax && x[0] <= bx && x[1] >= ay && x[1] <= by
            }
            DomainKind::Disc { center, radius } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                dx * dx + dy * dy <= radius * radius
            }
        }
    }
}

/// Classification of a grid node relative to Ω.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeState {
    /// Active unknown inside Ω.
    Interior,
    /// Node on (or straddling) ∂Ω; the field is pinned to zero here.
    Boundary,
    /// Padding node of the bounding box outside Ω̄ (disc grids only).
    Exterior,
}

/// Uniform tensor grid carrying the discretisation of Ω.
///
/// Nodes are stored row-major: `idx = i + j * nx`. For 1-D domains `ny == 1`.
/// `cell_volumes` are the quadrature weights of node-centred cells clipped to
/// Ω; they sum to L^n(Ω) (for the disc, within the declared cut-cell
/// tolerance `2h`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub domain: DomainSpec,
    pub nodes_per_axis: Vec<usize>,
    pub spacing: Vec<f64>,
    /// Node coordinates, `dim` entries per node.
    pub coords: Vec<f64>,
    pub node_state: Vec<NodeState>,
    pub cell_volumes: Vec<f64>,
    /// Sum of the cell volumes (the discrete |Ω| used by averaged integrals).
    pub total_volume: f64,
    /// Indices of interior nodes, in node order.
    pub interior: Vec<usize>,
}

impl GridSpec {
    pub fn num_nodes(&self) -> usize {
        self.node_state.len()
    }

    pub fn nx(&self) -> usize {
        self.nodes_per_axis[0]
    }

    pub fn ny(&self) -> usize {
        *self.nodes_per_axis.get(1).unwrap_or(&1)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i + j * self.nodes_per_axis[0]
    }

    pub fn coord(&self, node: usize) -> &[f64] {
        let d = self.domain.dim;
        &self.coords[node * d..node * d + d]
    }

    pub fn is_active(&self, node: usize) -> bool {
        self.node_state[node] != NodeState::Exterior
    }

    /// Declared cut-cell area tolerance for disc grids.
    pub fn declared_area_tol(&self) -> f64 {
        match self.domain.kind {
            DomainKind::Disc { .. } => 2.0 * self.spacing[0],
            _ => 1e-10 * self.domain.measure(),
        }
    }

    /// Walks every directed node adjacency and verifies the classification is
    /// consistent: boundary nodes touch at least one interior node, interior
    /// nodes never touch exterior ones. Returns the number of directed
    /// adjacencies inspected.
    pub fn adjacency_checks(&self) -> Result<usize> {
        let (nx, ny) = (self.nx(), self.ny());
        let mut checked = 0usize;
        for j in 0..ny {
            for i in 0..nx {
                let node = self.idx(i, j);
                let mut neighbors = Vec::with_capacity(4);
                if i > 0 {
                    neighbors.push(self.idx(i - 1, j));
                }
                if i + 1 < nx {
                    neighbors.push(self.idx(i + 1, j));
                }
                if j > 0 {
                    neighbors.push(self.idx(i, j - 1));
                }
                if j + 1 < ny {
                    neighbors.push(self.idx(i, j + 1));
                }
                for &nb in &neighbors {
                    checked += 1;
                    if self.node_state[node] == NodeState::Interior
                        && self.node_state[nb] == NodeState::Exterior
                    {
                        return Err(Error::InvalidGrid(format!(
                            "interior node {node} touches exterior node {nb}"
                        )));
                    }
                }
                // support check over the full 8-neighbourhood (corners of a
                // rectangle touch the interior only diagonally)
                if self.node_state[node] == NodeState::Boundary {
                    let mut has_interior_neighbor = false;
                    for dj in -1i64..=1 {
                        for di in -1i64..=1 {
                            if di == 0 && dj == 0 {
                                continue;
                            }
                            let (ii, jj) = (i as i64 + di, j as i64 + dj);
                            if ii < 0 || jj < 0 || ii >= nx as i64 || jj >= ny as i64 {
                                continue;
                            }
                            if self.node_state[self.idx(ii as usize, jj as usize)]
                                == NodeState::Interior
                            {
                                has_interior_neighbor = true;
                            }
                        }
                    }
                    if !has_interior_neighbor {
                        return Err(Error::InvalidGrid(format!(
                            "boundary node {node} has no interior neighbour"
                        )));
                    }
                }
            }
        }
        Ok(checked)
    }
}

/// Builds the uniform grid for `domain` with `resolution` nodes per axis.
pub fn build_grid(domain: &DomainSpec, resolution: usize) -> Result<GridSpec> {
    if resolution < 5 {
        return Err(Error::ResolutionTooSmall { min: 5, got: resolution });
    }
    match domain.kind {
        DomainKind::Interval { a, b } => build_interval(domain, resolution, a, b),
        DomainKind::Rectangle { ax, bx, ay, by } => {
            build_rectangle(domain, resolution, ax, bx, ay, by)
        }
        DomainKind::Disc { center, radius } => build_disc(domain, resolution, center, radius),
    }
}

fn build_interval(domain: &DomainSpec, n: usize, a: f64, b: f64) -> Result<GridSpec> {
    let h = (b - a) / (n - 1) as f64;
    let mut coords = Vec::with_capacity(n);
    let mut state = Vec::with_capacity(n);
    let mut vols = Vec::with_capacity(n);
    for i in 0..n {
        coords.push(a + i as f64 * h);
        if i == 0 || i == n - 1 {
            state.push(NodeState::Boundary);
            vols.push(h / 2.0);
        } else {
            state.push(NodeState::Interior);
            vols.push(h);
        }
    }
    finish_grid(domain, vec![n], vec![h], coords, state, vols)
}

fn build_rectangle(
    domain: &DomainSpec,
    n: usize,
    ax: f64,
    bx: f64,
    ay: f64,
    by: f64,
) -> Result<GridSpec> {
    let hx = (bx - ax) / (n - 1) as f64;
    let hy = (by - ay) / (n - 1) as f64;
    let axis_weight = |i: usize, h: f64| if i == 0 || i == n - 1 { h / 2.0 } else { h };
    let mut coords = Vec::with_capacity(2 * n * n);
    let mut state = Vec::with_capacity(n * n);
    let mut vols = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            coords.push(ax + i as f64 * hx);
            coords.push(ay + j as f64 * hy);
            let on_edge = i == 0 || i == n - 1 || j == 0 || j == n - 1;
            state.push(if on_edge { NodeState::Boundary } else { NodeState::Interior });
            vols.push(axis_weight(i, hx) * axis_weight(j, hy));
        }
    }
    finish_grid(domain, vec![n, n], vec![hx, hy], coords, state, vols)
}

fn build_disc(domain: &DomainSpec, n: usize, center: [f64; 2], radius: f64) -> Result<GridSpec> {
    let h = 2.0 * radius / (n - 1) as f64;
    let x0 = center[0] - radius;
    let y0 = center[1] - radius;
    let inside = |x: f64, y: f64| {
        let dx = x - center[0];
        let dy = y - center[1];
        dx * dx + dy * dy < radius * radius
    };
    // Unknowns keep a radial clearance of θ_min·h from the circle, so every
    // curved-boundary stencil sees a well-separated trace point; the nodes
    // dropped this way sit within 0.1h of ∂Ω (a first-order boundary
    // perturbation).
    let clearance = 0.1 * h;
    let unknown = |x: f64, y: f64| {
        let dx = x - center[0];
        let dy = y - center[1];
        (dx * dx + dy * dy).sqrt() < radius - clearance
    };
    let mut coords = Vec::with_capacity(2 * n * n);
    let mut active = Vec::with_capacity(n * n);
    let mut vols = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = x0 + i as f64 * h;
            let y = y0 + j as f64 * h;
            coords.push(x);
            coords.push(y);
            active.push(unknown(x, y));
            // cut-cell weight: fraction of the node cell inside Ω by 4x4 subsampling
            let mut frac = 0.0;
            for sj in 0..4 {
                for si in 0..4 {
                    let sx = x + ((si as f64 + 0.5) / 4.0 - 0.5) * h;
                    let sy = y + ((sj as f64 + 0.5) / 4.0 - 0.5) * h;
                    if inside(sx, sy) {
                        frac += 1.0 / 16.0;
                    }
                }
            }
            vols.push(frac * h * h);
        }
    }
    // Inside nodes are unknowns (the zero trace is imposed on the circle
    // itself by the curved-boundary stencils); the shell of outside nodes
    // adjacent to an inside node is tagged Boundary and pinned to zero, and
    // keeps the inside sliver of its cut cell in the quadrature.
    let idx = |i: usize, j: usize| i + j * n;
    let mut state: Vec<NodeState> = vec![NodeState::Exterior; n * n];
    for j in 0..n {
        for i in 0..n {
            let node = idx(i, j);
            if active[node] {
                state[node] = NodeState::Interior;
                continue;
            }
            let mut shell = false;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= n as i64 || jj >= n as i64 {
                        continue;
                    }
                    if active[idx(ii as usize, jj as usize)] {
                        shell = true;
                    }
                }
            }
            state[node] = if shell { NodeState::Boundary } else { NodeState::Exterior };
        }
    }
    for node in 0..n * n {
        if state[node] == NodeState::Exterior {
            vols[node] = 0.0;
        }
    }
    finish_grid(domain, vec![n, n], vec![h, h], coords, state, vols)
}

fn finish_grid(
    domain: &DomainSpec,
    nodes_per_axis: Vec<usize>,
    spacing: Vec<f64>,
    coords: Vec<f64>,
    node_state: Vec<NodeState>,
    cell_volumes: Vec<f64>,
) -> Result<GridSpec> {
    let total_volume = crate::util::pairwise_sum(&cell_volumes);
    let interior = node_state
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == NodeState::Interior)
        .map(|(i, _)| i)
        .collect::<Vec<_>>();
    if interior.is_empty() {
        return Err(Error::InvalidGrid("grid has no interior nodes".into()));
    }
    let grid = GridSpec {
        domain: *domain,
        nodes_per_axis,
        spacing,
        coords,
        node_state,
        cell_volumes,
        total_volume,
        interior,
    };
    let tol = grid.declared_area_tol();
    if (grid.total_volume - domain.measure()).abs() > tol {
        return Err(Error::InvalidGrid(format!(
            "quadrature weights sum to {} but |Omega| = {} (tol {tol})",
            grid.total_volume,
            domain.measure()
        )));
    }
    grid.adjacency_checks()?;
    Ok(grid)
}

/// Geometric quantities consumed by the a-priori eigenvalue bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryDescriptors {
    pub diameter: f64,
    /// H^{n-1}(∂Ω); for n = 1 this is the counting measure of the two endpoints.
    pub perimeter: f64,
    /// Sup-norms of the principal curvatures κ_1..κ_{n-1}; `None` when the
    /// boundary is not C² (rectangle corners).
    pub principal_curvatures: Option<Vec<f64>>,
    /// Tubular radius ε₀ on which d_Ω is C²; `None` for non-C² boundaries.
    pub eps0: Option<f64>,
    /// Poincaré constant for p = ∞ (clamped case); equals diam(Ω).
    pub poincare_const_clamped: f64,
    /// Conservative Poincaré–Wirtinger constant for p = ∞ (hinged case).
    pub poincare_wirtinger_const: f64,
}

impl GeometryDescriptors {
    /// Principal curvature sup-norms, or an error for non-C² boundaries.
    pub fn curvatures(&self) -> Result<&[f64]> {
        self.principal_curvatures.as_deref().ok_or_else(|| Error::GeometryUnavailable {
            quantity: "principal curvatures".into(),
            reason: "upper bound unavailable for this geometry (boundary is not C2)".into(),
        })
    }
}

/// Populates the geometric descriptors of `domain`.
///
/// Deterministic: repeated calls return bit-identical values.
pub fn descriptors(domain: &DomainSpec) -> GeometryDescriptors {
    match domain.kind {
        DomainKind::Interval { a, b } => {
            let d = b - a;
            GeometryDescriptors {
                diameter: d,
                perimeter: 2.0,
                principal_curvatures: Some(vec![]),
                eps0: Some(0.5 * (d / 2.0).min(1.0)),
                poincare_const_clamped: d,
                poincare_wirtinger_const: d,
            }
        }
        DomainKind::Rectangle { ax, bx, ay, by } => {
            let (w, h) = (bx - ax, by - ay);
            let d = (w * w + h * h).sqrt();
            GeometryDescriptors {
                diameter: d,
                perimeter: 2.0 * (w + h),
                principal_curvatures: None,
                eps0: None,
                poincare_const_clamped: d,
                poincare_wirtinger_const: d,
            }
        }
        DomainKind::Disc { radius, .. } => {
            let d = 2.0 * radius;
            GeometryDescriptors {
                diameter: d,
                perimeter: 2.0 * std::f64::consts::PI * radius,
                principal_curvatures: Some(vec![1.0 / radius]),
                // safely inside (0, min{1, 1/max kappa}) = (0, min{1, R})
                eps0: Some(radius.min(1.0) / 2.0),
                poincare_const_clamped: d,
                poincare_wirtinger_const: d,
            }
        }
    }
}

/// Orthogonal projection onto ∂Ω together with the boundary distance.
///
/// Defined for domains whose distance function is smooth along the projection
/// ray: the disc (away from its centre) and the interval (away from its
/// midpoint).
pub fn boundary_projection(domain: &DomainSpec, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    if !domain.contains(x) {
        return Err(Error::InvalidDomain(format!("point {x:?} is outside the closed domain")));
    }
    match domain.kind {
        DomainKind::Interval { a, b } => {
            let da = x[0] - a;
            let db = b - x[0];
            if da == db {
                return Err(Error::ProjectionNotUnique(x.to_vec()));
            }
            if da < db {
                Ok((vec![a], da))
            } else {
                Ok((vec![b], db))
            }
        }
        DomainKind::Disc { center, radius } => {
            let dx = x[0] - center[0];
            let dy = x[1] - center[1];
            let r = (dx * dx + dy * dy).sqrt();
            if r == 0.0 {
                return Err(Error::ProjectionNotUnique(x.to_vec()));
            }
            let proj = vec![center[0] + dx / r * radius, center[1] + dy / r * radius];
            Ok((proj, radius - r))
        }
        DomainKind::Rectangle { .. } => Err(Error::GeometryUnavailable {
            quantity: "boundary projection".into(),
            reason: "boundary is not C2 (corners)".into(),
        }),
    }
}
