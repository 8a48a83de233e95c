//! Run configuration: a strict TOML schema with field-level diagnostics.
//!
//! Unknown keys are errors (a silent typo in a density constant would
//! invalidate every invariant check downstream). The config hash is taken
//! over the canonical serialisation of the parsed structure, so it is stable
//! under key reordering in the file.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::continuation::Schedule;
use crate::densities::{density_f_from_name, density_g_from_name, DensityF, DensityG};
use crate::discretization::BcMode;
use crate::error::Error;
use crate::geometry::{DomainKind, DomainSpec};
use crate::psolver::SolverSettings;
use crate::util::fnv1a64;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub output_dir: String,
    pub domain: DomainSection,
    pub problem: ProblemSection,
    pub density_f: DensitySection,
    pub density_g: DensitySection,
    pub grid: GridSection,
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub solver: SolverSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub kind: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub ax: Option<f64>,
    pub bx: Option<f64>,
    pub ay: Option<f64>,
    pub by: Option<f64>,
    pub cx: Option<f64>,
    pub cy: Option<f64>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub bc: String,
    pub target_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    pub name: String,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub p0: f64,
    pub factor: f64,
    pub p_max: f64,
    #[serde(default)]
    pub lambda_rtol: f64,
}

/// The parsed and validated run configuration.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    /// Echo of the raw parse (serialised into the report).
    pub raw: RunConfig,
    pub domain: DomainSpec,
    pub bc: BcMode,
    pub density_f: DensityF,
    pub density_g: DensityG,
    pub resolution: usize,
    pub schedule: Schedule,
    pub solver: SolverSettings,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub hash: u64,
}

fn cfg_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config { field: field.into(), message: message.into() }
}

impl RunConfig {
    /// Canonical FNV-1a hash of the parsed structure.
    pub fn hash(&self) -> u64 {
        let canonical = serde_json::to_string(self).expect("config serialises");
        fnv1a64(canonical.as_bytes())
    }

    pub fn validate(self) -> Result<ValidatedConfig> {
        let d = &self.domain;
        let forbid = |fields: &[(&str, Option<f64>)]| -> Result<()> {
            for (name, v) in fields {
                if v.is_some() {
                    return Err(cfg_err(
                        &format!("domain.{name}"),
                        format!("not applicable for kind `{}`", d.kind),
                    ));
                }
            }
            Ok(())
        };
        let need = |name: &str, v: Option<f64>| -> Result<f64> {
            v.ok_or_else(|| cfg_err(&format!("domain.{name}"), "required for this domain kind"))
        };
        let kind = match d.kind.as_str() {
            "interval" => {
                forbid(&[
                    ("ax", d.ax),
                    ("bx", d.bx),
                    ("ay", d.ay),
                    ("by", d.by),
                    ("cx", d.cx),
                    ("cy", d.cy),
                    ("radius", d.radius),
                ])?;
                DomainKind::Interval { a: need("a", d.a)?, b: need("b", d.b)? }
            }
            "rectangle" => {
                forbid(&[("a", d.a), ("b", d.b), ("cx", d.cx), ("cy", d.cy), ("radius", d.radius)])?;
                DomainKind::Rectangle {
                    ax: need("ax", d.ax)?,
                    bx: need("bx", d.bx)?,
                    ay: need("ay", d.ay)?,
                    by: need("by", d.by)?,
                }
            }
            "disc" => {
                forbid(&[
                    ("a", d.a),
                    ("b", d.b),
                    ("ax", d.ax),
                    ("bx", d.bx),
                    ("ay", d.ay),
                    ("by", d.by),
                ])?;
                DomainKind::Disc {
                    center: [need("cx", d.cx)?, need("cy", d.cy)?],
                    radius: need("radius", d.radius)?,
                }
            }
            other => return Err(cfg_err("domain.kind", format!("unknown kind `{other}`"))),
        };
        let domain = DomainSpec::new(kind, self.problem.target_dim)
            .map_err(|e| cfg_err("domain", e.to_string()))?;

        let bc = match self.problem.bc.as_str() {
            "hinged" => BcMode::Hinged,
            "clamped" => BcMode::Clamped,
            other => {
                return Err(cfg_err(
                    "problem.bc",
                    format!("must be `hinged` or `clamped`, got `{other}`"),
                ))
            }
        };

        let density_f = build_density_f(&self.density_f)?;
        let density_g = build_density_g(&self.density_g)?;

        if self.grid.resolution < 5 {
            return Err(cfg_err("grid.resolution", "must be at least 5"));
        }

        let schedule = Schedule {
            p0: self.schedule.p0,
            factor: self.schedule.factor,
            p_max: self.schedule.p_max,
            lambda_rtol: self.schedule.lambda_rtol,
        };
        schedule.validate()?;
        let p_floor = domain.dim as f64 / density_f.constants.alpha;
        if schedule.p0 <= p_floor {
            return Err(cfg_err(
                "schedule.p0",
                format!(
                    "the L^p scheme needs p > n/alpha = {p_floor}; got p0 = {}",
                    schedule.p0
                ),
            ));
        }

        if self.output_dir.is_empty() {
            return Err(cfg_err("output_dir", "must not be empty"));
        }

        let hash = self.hash();
        Ok(ValidatedConfig {
            domain,
            bc,
            density_f,
            density_g,
            resolution: self.grid.resolution,
            schedule,
            solver: self.solver,
            seed: self.seed,
            output_dir: PathBuf::from(&self.output_dir),
            hash,
            raw: self,
        })
    }
}

fn density_params(section: &DensitySection, field: &str, allowed: &[&str]) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    let entries = [("alpha", section.alpha), ("gamma", section.gamma), ("mu", section.mu)];
    for (key, value) in entries {
        if let Some(v) = value {
            if !allowed.contains(&key) {
                return Err(cfg_err(
                    &format!("{field}.{key}"),
                    format!("parameter not accepted by density `{}`", section.name),
                ));
            }
            map.insert(key.to_string(), v);
        }
    }
    Ok(map)
}

fn build_density_f(section: &DensitySection) -> Result<DensityF> {
    let allowed: &[&str] = match section.name.as_str() {
        "power_frobenius" => &["alpha"],
        "shifted_power" => &["mu", "alpha"],
        _ => &[],
    };
    let params = density_params(section, "density_f", allowed)?;
    density_f_from_name(&section.name, &params)
}

fn build_density_g(section: &DensitySection) -> Result<DensityG> {
    let allowed: &[&str] = match section.name.as_str() {
        "eta_power" | "p_power" => &["gamma"],
        _ => &[],
    };
    let params = density_params(section, "density_g", allowed)?;
    density_g_from_name(&section.name, &params)
}

/// Parses a TOML run configuration.
pub fn parse_config(text: &str) -> Result<ValidatedConfig> {
    let raw: RunConfig =
        toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    raw.validate()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const BENCH_TOML: &str = r#"
seed = 7
output_dir = "out/bench"

[domain]
kind = "interval"
a = 0.0
b = 1.0

[problem]
bc = "hinged"
target_dim = 1

[density_f]
name = "power_frobenius"
alpha = 2.0

[density_g]
name = "eta_power"
gamma = 2.0

[grid]
resolution = 101

[schedule]
p0 = 4.0
factor = 2.0
p_max = 64.0
"#;

    #[test]
    fn parses_benchmark_config() {
        let cfg = parse_config(BENCH_TOML).unwrap();
        assert_eq!(cfg.resolution, 101);
        assert_eq!(cfg.bc, BcMode::Hinged);
        assert_eq!(cfg.schedule.p0, 4.0);
        assert_eq!(cfg.solver, SolverSettings::default());
    }

    #[test]
    fn unknown_key_is_an_error() {
        let bad = BENCH_TOML.replace("seed = 7", "seed = 7\ntypo_key = 1");
        let err = parse_config(&bad).unwrap_err();
        assert!(err.to_string().contains("typo_key"), "{err}");
    }

    #[test]
    fn p_max_below_p0_names_the_field() {
        let bad = BENCH_TOML.replace("p_max = 64.0", "p_max = 2.0");
        let err = parse_config(&bad).unwrap_err();
        assert!(err.to_string().contains("schedule.p_max"), "{err}");
    }

    #[test]
    fn inapplicable_domain_field_rejected() {
        let bad = BENCH_TOML.replace("b = 1.0", "b = 1.0\nradius = 2.0");
        let err = parse_config(&bad).unwrap_err();
        assert!(err.to_string().contains("domain.radius"), "{err}");
    }

    #[test]
    fn hash_stable_under_key_reordering() {
        let reordered = BENCH_TOML.replace(
            "[domain]\nkind = \"interval\"\na = 0.0\nb = 1.0",
            "[domain]\nb = 1.0\na = 0.0\nkind = \"interval\"",
        );
        let a = parse_config(BENCH_TOML).unwrap();
        let b = parse_config(&reordered).unwrap();
        assert_eq!(a.hash, b.hash);
        // and sensitive to value changes
        let c = parse_config(&BENCH_TOML.replace("seed = 7", "seed = 8")).unwrap();
        assert_ne!(a.hash, c.hash);
    }
}
