//! Machine-readable run reports and columnar trace/measure files.
//!
//! `report.json` is schema-versioned and bit-identical across reruns of the
//! same config and seed; wall-clock timings therefore live in a separate
//! `timings.json`. λ_p overflows f64 at large p, so the per-p table carries
//! log10 λ_p (always finite) alongside Λ_p = λ_p^{1/p}.

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundsReport, SandwichVerdict};
use crate::config::RunConfig;
use crate::continuation::{ContinuationTrace, Extrapolation, TerminationReason};
use crate::error::Error;
use crate::Result;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerPRow {
    pub p: f64,
    pub lambda_big: f64,
    pub l_p: f64,
    pub log10_lambda: f64,
    pub constraint_residual: f64,
    pub el_residual: f64,
    pub nu_mass: f64,
    pub m_mass: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantVerdicts {
    /// Sampled verification of the declared density constants succeeded.
    pub density_assumptions_ok: bool,
    pub all_converged: bool,
    pub all_sandwich_ok: bool,
    pub all_nu_mass_ok: bool,
    pub all_m_mass_ok: bool,
    pub all_pairing_ok: bool,
    pub bounds_ok: Option<bool>,
    pub overall: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub config_hash: String,
    /// Sampled verification of the declared density constants.
    pub assumptions: crate::densities::AssumptionReport,
    pub per_p: Vec<PerPRow>,
    pub extrapolation: Option<Extrapolation>,
    pub lambda_estimate: Option<f64>,
    pub bounds: Option<BoundsReport>,
    pub sandwich: Option<SandwichVerdict>,
    pub invariants: InvariantVerdicts,
    pub termination: TerminationReason,
    pub timings_file: String,
}

impl RunReport {
    /// Every numeric field of the report must be finite.
    pub fn validate_finite(&self) -> Result<()> {
        let check = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvariantViolated(format!("report field {name} is not finite: {v}")))
            }
        };
        for (i, row) in self.per_p.iter().enumerate() {
            check(&format!("per_p[{i}].p"), row.p)?;
            check(&format!("per_p[{i}].lambda_big"), row.lambda_big)?;
            check(&format!("per_p[{i}].l_p"), row.l_p)?;
            check(&format!("per_p[{i}].log10_lambda"), row.log10_lambda)?;
            check(&format!("per_p[{i}].constraint_residual"), row.constraint_residual)?;
            check(&format!("per_p[{i}].el_residual"), row.el_residual)?;
            check(&format!("per_p[{i}].nu_mass"), row.nu_mass)?;
            check(&format!("per_p[{i}].m_mass"), row.m_mass)?;
        }
        if let Some(e) = &self.extrapolation {
            check("extrapolation.lambda_inf", e.lambda_inf)?;
            check("extrapolation.fit_residual", e.fit_residual)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::MalformedArtifact(format!("report.json: {e}")))
    }
}

/// Builds the per-p table of a trace.
pub fn per_p_rows(trace: &ContinuationTrace) -> Vec<PerPRow> {
    trace
        .steps
        .iter()
        .map(|s| PerPRow {
            p: s.result.p,
            lambda_big: s.result.eigenvalue,
            l_p: s.result.l_p,
            log10_lambda: s.result.ln_lambda_p / std::f64::consts::LN_10,
            constraint_residual: s.result.constraint_residual,
            el_residual: s.result.el_residual,
            nu_mass: s.diagnostics.mass.nu_mass,
            m_mass: s.diagnostics.mass.m_mass,
            converged: s.result.converged,
        })
        .collect()
}

pub const TRACE_HEADER: &str =
    "p,Lambda_p,L_p,log10_lambda_p,constraint_residual,el_residual,nu_mass,m_mass,converged";

/// Renders `trace.csv` (one row per exponent).
pub fn trace_csv(rows: &[PerPRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.p,
            r.lambda_big,
            r.l_p,
            r.log10_lambda,
            r.constraint_residual,
            r.el_residual,
            r.nu_mass,
            r.m_mass,
            r.converged
        ));
    }
    out
}

/// Parses `trace.csv` back into rows.
pub fn parse_trace_csv(text: &str) -> Result<Vec<PerPRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::MalformedArtifact("trace.csv is empty".into()))?;
    if header != TRACE_HEADER {
        return Err(Error::MalformedArtifact(format!("trace.csv header mismatch: {header}")));
    }
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 9 {
            return Err(Error::MalformedArtifact(format!(
                "trace.csv line {}: expected 9 cells, got {}",
                ln + 2,
                cells.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            cells[i].parse().map_err(|e| {
                Error::MalformedArtifact(format!("trace.csv line {}: {e}", ln + 2))
            })
        };
        rows.push(PerPRow {
            p: num(0)?,
            lambda_big: num(1)?,
            l_p: num(2)?,
            log10_lambda: num(3)?,
            constraint_residual: num(4)?,
            el_residual: num(5)?,
            nu_mass: num(6)?,
            m_mass: num(7)?,
            converged: cells[8].trim() == "true",
        });
    }
    Ok(rows)
}

/// Per-node measure export: coordinates, constraint density, ν weight,
/// |M| weight, then the packed M components.
pub fn measures_csv(
    grid: &crate::geometry::GridSpec,
    gvals: &[f64],
    m: &crate::measures::DiscreteMeasure,
    nu: &crate::measures::DiscreteMeasure,
) -> String {
    let dim = grid.domain.dim;
    let block = m.weights.len() / grid.num_nodes();
    let mut out = String::new();
    out.push_str(if dim == 1 { "x" } else { "x,y" });
    out.push_str(",g_density,nu_weight,m_abs");
    for k in 0..block {
        out.push_str(&format!(",m_{k}"));
    }
    out.push('\n');
    for node in 0..grid.num_nodes() {
        if grid.cell_volumes[node] == 0.0 {
            continue;
        }
        let x = grid.coord(node);
        if dim == 1 {
            out.push_str(&format!("{}", x[0]));
        } else {
            out.push_str(&format!("{},{}", x[0], x[1]));
        }
        let mslice = &m.weights[node * block..(node + 1) * block];
        let mabs = crate::densities::sym_frob_sq(mslice, dim).sqrt();
        out.push_str(&format!(",{},{},{}", gvals[node], nu.weights[node], mabs));
        for v in mslice {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// A parsed measures file: per-node ν weights, |M| weights and g values.
#[derive(Debug, Clone)]
pub struct MeasuresFile {
    pub coords: Vec<Vec<f64>>,
    pub g_density: Vec<f64>,
    pub nu_weight: Vec<f64>,
    pub m_abs: Vec<f64>,
    pub m_components: Vec<Vec<f64>>,
}

pub fn parse_measures_csv(text: &str) -> Result<MeasuresFile> {
    let mut lines = text.lines();
    let header =
        lines.next().ok_or_else(|| Error::MalformedArtifact("measures csv is empty".into()))?;
    let names: Vec<&str> = header.split(',').collect();
    let coord_cols = if names.first() == Some(&"x") && names.get(1) == Some(&"y") {
        2
    } else if names.first() == Some(&"x") {
        1
    } else {
        return Err(Error::MalformedArtifact(format!("measures header mismatch: {header}")));
    };
    let mut file = MeasuresFile {
        coords: Vec::new(),
        g_density: Vec::new(),
        nu_weight: Vec::new(),
        m_abs: Vec::new(),
        m_components: Vec::new(),
    };
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != names.len() {
            return Err(Error::MalformedArtifact(format!(
                "measures csv line {}: expected {} cells",
                ln + 2,
                names.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            cells[i]
                .parse()
                .map_err(|e| Error::MalformedArtifact(format!("measures csv line {}: {e}", ln + 2)))
        };
        let mut coord = Vec::with_capacity(coord_cols);
        for i in 0..coord_cols {
            coord.push(num(i)?);
        }
        file.coords.push(coord);
        file.g_density.push(num(coord_cols)?);
        file.nu_weight.push(num(coord_cols + 1)?);
        file.m_abs.push(num(coord_cols + 2)?);
        let mut comps = Vec::new();
        for i in coord_cols + 3..names.len() {
            comps.push(num(i)?);
        }
        file.m_components.push(comps);
    }
    Ok(file)
}
