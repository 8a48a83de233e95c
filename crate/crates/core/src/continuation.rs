//! Drives the exponent schedule p₀ → 2p₀ → 4p₀ → …, warm-starting each solve
//! from the previous minimiser, recording convergence diagnostics, and
//! extrapolating the eigenvalue to p = ∞.

use serde::{Deserialize, Serialize};

use crate::discretization::{linf_norm, BcMode, GridField};
use crate::error::Error;
use crate::measures::{
    assemble_measures, mass_bounds_report, pairing_residual, DiscreteMeasure, MassBoundsReport,
};
use crate::psolver::{bubble_init, solve_p, Discretized, PRunResult, SolverSettings, WarmStart};
use crate::util::fnv1a64;
use crate::Result;

/// The exponent schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub p0: f64,
    pub factor: f64,
    pub p_max: f64,
    /// Early-termination threshold on |Λ_{2p} − Λ_p|/Λ_p; 0 disables.
    pub lambda_rtol: f64,
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.p0 > 1.0) {
            return Err(Error::Config {
                field: "schedule.p0".into(),
                message: format!("p0 must exceed 1, got {}", self.p0),
            });
        }
        if !(self.factor > 1.0) {
            return Err(Error::Config {
                field: "schedule.factor".into(),
                message: format!("factor must exceed 1, got {}", self.factor),
            });
        }
        if self.p_max < self.p0 {
            return Err(Error::Config {
                field: "schedule.p_max".into(),
                message: format!("p_max = {} is below p0 = {}", self.p_max, self.p0),
            });
        }
        if self.lambda_rtol < 0.0 {
            return Err(Error::Config {
                field: "schedule.lambda_rtol".into(),
                message: "lambda_rtol must be nonnegative".into(),
            });
        }
        Ok(())
    }
}

/// Per-step convergence diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// max-node |u_{2p} − u_p| against the previous step (C⁰ proxy).
    pub c0_diff: Option<f64>,
    /// max-node |Du_{2p} − Du_p| (C¹ proxy).
    pub c1_diff: Option<f64>,
    /// Scaling applied by the warm-start re-normalisation.
    pub warm_start_scale: f64,
    /// ‖g(u_p, Du_p)‖_{L∞} at the converged iterate.
    pub constraint_sup: f64,
    pub mass: MassBoundsReport,
    pub pairing_residual: f64,
}

/// One accepted continuation step: the solve plus its measures.
#[derive(Debug, Clone)]
pub struct ContinuationStep {
    pub result: PRunResult,
    pub diagnostics: StepDiagnostics,
    pub m_measure: DiscreteMeasure,
    pub nu_measure: DiscreteMeasure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TerminationReason {
    ReachedPMax,
    LambdaConverged,
    SolveFailed(String),
}

/// Richardson-style extrapolation Λ_p ≈ Λ∞ + a/p over the last three steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub lambda_inf: f64,
    pub slope: f64,
    /// max |fit − Λ_p| over the fitted points.
    pub fit_residual: f64,
    /// Set when the tail is non-monotone beyond noise; `lambda_inf` then
    /// falls back to the last Λ_p.
    pub non_monotone_warning: bool,
}

#[derive(Debug, Clone)]
pub struct ContinuationTrace {
    pub steps: Vec<ContinuationStep>,
    pub extrapolation: Option<Extrapolation>,
    pub termination: TerminationReason,
}

impl ContinuationTrace {
    pub fn final_eigenvalue(&self) -> Option<f64> {
        self.steps.last().map(|s| s.result.eigenvalue)
    }

    /// The eigenvalue estimate: extrapolated when available, else the last Λ_p.
    pub fn lambda_estimate(&self) -> Option<f64> {
        self.extrapolation.map(|e| e.lambda_inf).or_else(|| self.final_eigenvalue())
    }
}

/// Runs the schedule from the polynomial bubble (or `init` when given).
pub fn run_continuation(
    model: &Discretized,
    bc: BcMode,
    schedule: &Schedule,
    settings: &SolverSettings,
    init: Option<GridField>,
) -> Result<ContinuationTrace> {
    schedule.validate()?;
    let u0 = init.unwrap_or_else(|| bubble_init(model.grid, model.ncomp, bc));
    continue_from(model, schedule, settings, u0, None, schedule.p0)
}

/// Continues a schedule from an arbitrary state (used by checkpoint resume).
pub fn continue_from(
    model: &Discretized,
    schedule: &Schedule,
    settings: &SolverSettings,
    mut u: GridField,
    mut warm: Option<WarmStart>,
    first_p: f64,
) -> Result<ContinuationTrace> {
    let mut steps: Vec<ContinuationStep> = Vec::new();
    let termination;
    let mut p = first_p;
    let mut prev_u: Option<GridField> = None;

    loop {
        let result = match solve_p(model, &u, p, settings, warm) {
            Ok(r) => r,
            Err(e) => {
                termination = TerminationReason::SolveFailed(e.to_string());
                break;
            }
        };
        if !result.converged {
            termination =
                TerminationReason::SolveFailed(format!("solve at p = {p} did not converge"));
            steps.push(build_step(model, result, prev_u.as_ref(), settings.el_test_fields)?);
            break;
        }
        let step = build_step(model, result, prev_u.as_ref(), settings.el_test_fields)?;
        let lambda = step.result.eigenvalue;
        let prev_lambda = steps.last().map(|s| s.result.eigenvalue);
        prev_u = Some(step.result.u_p.clone());
        warm = Some(step.result.warm);
        steps.push(step);

        if let (Some(prev), true) = (prev_lambda, schedule.lambda_rtol > 0.0) {
            if (lambda - prev).abs() / prev.abs().max(1e-300) < schedule.lambda_rtol {
                termination = TerminationReason::LambdaConverged;
                break;
            }
        }
        if p >= schedule.p_max {
            termination = TerminationReason::ReachedPMax;
            break;
        }
        u = prev_u.clone().unwrap();
        p = (p * schedule.factor).min(schedule.p_max);
    }

    let extrapolation = extrapolate_lambda_from_steps(&steps).ok();
    Ok(ContinuationTrace { steps, extrapolation, termination })
}

fn build_step(
    model: &Discretized,
    result: PRunResult,
    prev_u: Option<&GridField>,
    test_fields: usize,
) -> Result<ContinuationStep> {
    let grid = model.grid;
    let data = model.field_data(&result.u_p);
    let constraint_sup = linf_norm(&data.gvals, grid);

    let (c0_diff, c1_diff) = match prev_u {
        Some(prev) => {
            let diff: Vec<f64> = result
                .u_p
                .values
                .iter()
                .zip(&prev.values)
                .map(|(a, b)| (a - b).abs())
                .collect();
            let du_new = model.ops.gradient(grid, &result.u_p);
            let du_prev = model.ops.gradient(grid, prev);
            let gdiff: Vec<f64> =
                du_new.iter().zip(&du_prev).map(|(a, b)| (a - b).abs()).collect();
            (Some(crate::util::max_abs(&diff)), Some(crate::util::max_abs(&gdiff)))
        }
        None => (None, None),
    };

    let (m_measure, nu_measure) = assemble_measures(model, &result)?;
    let mass = mass_bounds_report(model, &m_measure, &nu_measure, &result);
    // evaluated on the same test basis as the weak-form residual, so the two
    // residuals stay commensurate
    let pairing = pairing_residual(model, &m_measure, &nu_measure, &result, test_fields, None);

    Ok(ContinuationStep {
        diagnostics: StepDiagnostics {
            c0_diff,
            c1_diff,
            warm_start_scale: result.warm_start_scale,
            constraint_sup,
            mass,
            pairing_residual: pairing,
        },
        m_measure,
        nu_measure,
        result,
    })
}

/// Extrapolates Λ∞ from the last three converged steps of a trace.
pub fn extrapolate_lambda(trace: &ContinuationTrace) -> Result<Extrapolation> {
    extrapolate_lambda_from_steps(&trace.steps)
}

fn extrapolate_lambda_from_steps(steps: &[ContinuationStep]) -> Result<Extrapolation> {
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .filter(|s| s.result.converged)
        .map(|s| (s.result.p, s.result.eigenvalue))
        .collect();
    extrapolate_lambda_points(&pts)
}

/// Least-squares fit Λ_p ≈ Λ∞ + a/p over the last three (p, Λ_p) points.
pub fn extrapolate_lambda_points(points: &[(f64, f64)]) -> Result<Extrapolation> {
    if points.len() < 3 {
        return Err(Error::SolverFailed(format!(
            "extrapolation needs at least 3 converged steps, got {}",
            points.len()
        )));
    }
    let tail = &points[points.len() - 3..];
    let last_lambda = tail[2].1;

    // non-monotone tail beyond noise: fall back to the last value
    let d1 = tail[1].1 - tail[0].1;
    let d2 = tail[2].1 - tail[1].1;
    let noise = 1e-9 * last_lambda.abs().max(1e-300);
    if d1 * d2 < 0.0 && d1.abs() > noise && d2.abs() > noise {
        return Ok(Extrapolation {
            lambda_inf: last_lambda,
            slope: 0.0,
            fit_residual: d1.abs().max(d2.abs()),
            non_monotone_warning: true,
        });
    }

    let xs: Vec<f64> = tail.iter().map(|(p, _)| 1.0 / p).collect();
    let ys: Vec<f64> = tail.iter().map(|(_, y)| *y).collect();
    let xbar = xs.iter().sum::<f64>() / 3.0;
    let ybar = ys.iter().sum::<f64>() / 3.0;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = ybar - slope * xbar;
    let fit_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (intercept + slope * x - y).abs())
        .fold(0.0f64, f64::max);
    Ok(Extrapolation { lambda_inf: intercept, slope, fit_residual, non_monotone_warning: false })
}

/// Serialised solver state allowing a bit-exact resume of the remaining
/// schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_hash: u64,
    /// Exponent of the last completed step.
    pub p: f64,
    pub theta: f64,
    pub penalty: f64,
    pub rng_state: u64,
    pub step_index: u32,
    pub bc: BcMode,
    pub ncomp: u32,
    pub nodes: u32,
    pub values: Vec<f64>,
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"LPEV";
const CHECKPOINT_VERSION: u16 = 1;

impl Checkpoint {
    pub fn from_step(
        config_hash: u64,
        step_index: usize,
        result: &PRunResult,
        rng_state: u64,
    ) -> Self {
        Checkpoint {
            config_hash,
            p: result.p,
            theta: result.warm.theta,
            penalty: result.warm.penalty,
            rng_state,
            step_index: step_index as u32,
            bc: result.u_p.bc,
            ncomp: result.u_p.ncomp as u32,
            nodes: (result.u_p.values.len() / result.u_p.ncomp) as u32,
            values: result.u_p.values.clone(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.values.len() * 8);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.config_hash.to_le_bytes());
        out.extend_from_slice(&self.p.to_le_bytes());
        out.extend_from_slice(&self.theta.to_le_bytes());
        out.extend_from_slice(&self.penalty.to_le_bytes());
        out.extend_from_slice(&self.rng_state.to_le_bytes());
        out.extend_from_slice(&self.step_index.to_le_bytes());
        out.push(match self.bc {
            BcMode::Hinged => 0,
            BcMode::Clamped => 1,
        });
        out.extend_from_slice(&self.ncomp.to_le_bytes());
        out.extend_from_slice(&self.nodes.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let checksum = fnv1a64(&out);
        out.extend_from_slice(&checksum.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fail = |m: &str| Error::CorruptCheckpoint(m.into());
        if bytes.len() < 4 + 2 + 8 * 5 + 4 + 1 + 4 + 4 + 8 {
            return Err(fail("file too short"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        let stored = u64::from_le_bytes(tail.try_into().unwrap());
        if fnv1a64(body) != stored {
            return Err(fail("checksum mismatch"));
        }
        if &body[0..4] != CHECKPOINT_MAGIC {
            return Err(fail("bad magic"));
        }
        let version = u16::from_le_bytes(body[4..6].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(fail(&format!("unsupported version {version}")));
        }
        let mut off = 6;
        let read_u64 = |off: &mut usize| {
            let v = u64::from_le_bytes(body[*off..*off + 8].try_into().unwrap());
            *off += 8;
            v
        };
        let config_hash = read_u64(&mut off);
        let p = f64::from_bits(read_u64(&mut off));
        let theta = f64::from_bits(read_u64(&mut off));
        let penalty = f64::from_bits(read_u64(&mut off));
        let rng_state = read_u64(&mut off);
        let step_index = u32::from_le_bytes(body[off..off + 4].try_into().unwrap());
        off += 4;
        let bc = match body[off] {
            0 => BcMode::Hinged,
            1 => BcMode::Clamped,
            b => return Err(fail(&format!("bad bc tag {b}"))),
        };
        off += 1;
        let ncomp = u32::from_le_bytes(body[off..off + 4].try_into().unwrap());
        off += 4;
        let nodes = u32::from_le_bytes(body[off..off + 4].try_into().unwrap());
        off += 4;
        let count = (ncomp as usize) * (nodes as usize);
        if body.len() != off + count * 8 {
            return Err(fail("length does not match header"));
        }
        let mut values = Vec::with_capacity(count);
        for k in 0..count {
            values.push(f64::from_le_bytes(body[off + k * 8..off + k * 8 + 8].try_into().unwrap()));
        }
        Ok(Checkpoint {
            config_hash,
            p,
            theta,
            penalty,
            rng_state,
            step_index,
            bc,
            ncomp,
            nodes,
            values,
        })
    }

    /// Resumes the remaining schedule. Fails when `expected_hash` differs
    /// from the stored config hash.
    pub fn resume(
        &self,
        model: &Discretized,
        schedule: &Schedule,
        settings: &SolverSettings,
        expected_hash: u64,
    ) -> Result<ContinuationTrace> {
        if self.config_hash != expected_hash {
            return Err(Error::ConfigHashMismatch {
                checkpoint: self.config_hash,
                current: expected_hash,
            });
        }
        if self.nodes as usize != model.grid.num_nodes() || self.ncomp as usize != model.ncomp {
            return Err(Error::CorruptCheckpoint(format!(
                "field shape {}x{} does not match the grid ({} nodes, N = {})",
                self.nodes,
                self.ncomp,
                model.grid.num_nodes(),
                model.ncomp
            )));
        }
        if self.p >= schedule.p_max {
            return Err(Error::SolverFailed("checkpoint is already at p_max".into()));
        }
        let u = GridField { ncomp: self.ncomp as usize, bc: self.bc, values: self.values.clone() };
        let next_p = (self.p * schedule.factor).min(schedule.p_max);
        continue_from(
            model,
            schedule,
            settings,
            u,
            Some(WarmStart { theta: self.theta, penalty: self.penalty }),
            next_p,
        )
    }
}
