//! Solver library for second-order vectorial L∞ eigenvalue problems.
//!
//! The library computes eigenpairs (u∞, Λ∞) of the constrained supremal problem
//!
//! ```text
//! minimise  ‖f(D²u)‖_L∞(Ω)   subject to  ‖g(u, Du)‖_L∞(Ω) = 1,
//! ```
//!
//! over maps u: Ω → R^N with hinged (u = 0 on ∂Ω) or clamped (u = Du = 0 on ∂Ω)
//! boundary conditions, by solving a sequence of L^p-constrained problems for an
//! increasing exponent schedule and extrapolating p → ∞. Each finite-p solve
//! carries the machinery needed to audit it: the Lagrange multiplier λ_p and the
//! eigenvalue Λ_p = λ_p^{1/p}, the multiplier sandwich against L_p, the discrete
//! parametric measures (M_p, ν_p) with their mass bounds, the weak-form residual,
//! and a-priori lower/upper bounds on the eigenvalue.
//!
//! Modules mirror the pipeline: [`geometry`] (domains and grids), [`densities`]
//! (the integrands f, g), [`discretization`] (stencils and rescaled L^p norms),
//! [`normalization`] (constraint scaling), [`psolver`] (the finite-p solve),
//! [`continuation`] (the p-schedule), [`measures`] (M_p, ν_p diagnostics),
//! [`bounds`] (a-priori eigenvalue bounds), and [`config`]/[`report`]/[`runner`]
//! (batch front door used by the CLI).

pub mod bounds;
pub mod config;
pub mod continuation;
pub mod densities;
pub mod discretization;
pub mod error;
pub mod geometry;
pub mod measures;
pub mod normalization;
pub mod psolver;
pub mod report;
pub mod runner;
pub mod util;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
