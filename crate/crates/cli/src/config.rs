//! Run configuration: TOML with defaults, strict keys and a prescription registry.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use kcurv::grid::Resolution;
use kcurv::prescription::{
    ConcaveTau, ConstantPrescription, ModelPrescription, Prescription, ReferencePrescription, TauPower,
};
use kcurv::solver::SolverConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {msg}")]
    Invalid { key: String, msg: String },
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), msg: msg.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    AuditOnly,
    IdentityCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    /// `[n]` on S¹, `[nlat, nlon]` on S².
    pub resolution: Vec<usize>,
}

impl GridConfig {
    pub fn resolution(&self) -> Result<Resolution, ConfigError> {
        match (self.dim, self.resolution.as_slice()) {
            (1, [n]) => Ok(Resolution::Circle(*n)),
            (2, [nlat, nlon]) => Ok(Resolution::Sphere { nlat: *nlat, nlon: *nlon }),
            (1 | 2, _) => Err(invalid("grid.resolution", format!("needs {} entries for dim = {}", self.dim, self.dim))),
            (d, _) => Err(invalid("grid.dim", format!("must be 1 or 2, got {d}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrescriptionConfig {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

const REGISTRY: &[(&str, &[(&str, f64)])] = &[
    ("model", &[("base", 0.5), ("variation", 0.0), ("power", 2.0)]),
    ("tau-power", &[("scale", 0.5), ("power", 2.0)]),
    ("concave-tau", &[("scale", 0.5)]),
    ("constant", &[("value", 0.5)]),
    ("reference", &[("power", 2.0)]),
];

impl PrescriptionConfig {
    pub fn build(&self) -> Result<Box<dyn Prescription>, ConfigError> {
        let Some((_, known)) = REGISTRY.iter().find(|(n, _)| *n == self.name) else {
            let names: Vec<&str> = REGISTRY.iter().map(|(n, _)| *n).collect();
            return Err(invalid("prescription.name", format!("unknown `{}`, expected one of {names:?}", self.name)));
        };
        if let Some(extra) = self.params.keys().find(|k| !known.iter().any(|(n, _)| n == k)) {
            return Err(invalid(&format!("prescription.params.{extra}"), format!("not a parameter of `{}`", self.name)));
        }
        let get = |key: &str| {
            let default = known.iter().find(|(n, _)| *n == key).map(|(_, v)| *v).unwrap_or(f64::NAN);
            let v = self.params.get(key).copied().unwrap_or(default);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(invalid(&format!("prescription.params.{key}"), "must be finite"))
            }
        };
        let psi: Box<dyn Prescription> = match self.name.as_str() {
            "model" => Box::new(
                ModelPrescription::new(get("base")?, get("variation")?, get("power")?)
                    .map_err(|e| invalid("prescription.params", e.to_string()))?,
            ),
            "tau-power" => Box::new(TauPower { scale: get("scale")?, power: get("power")? }),
            "concave-tau" => Box::new(ConcaveTau { scale: get("scale")? }),
            "constant" => Box::new(ConstantPrescription { value: get("value")? }),
            _ => Box::new(ReferencePrescription { power: get("power")? }),
        };
        Ok(psi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub r_lo: f64,
    pub r_hi: f64,
    pub tau_max: f64,
    pub n_r: usize,
    pub n_tau: usize,
    /// Sample directions per sphere coordinate.
    pub n_xi: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig { r_lo: 0.1, r_hi: 2.0, tau_max: 20.0, n_r: 40, n_tau: 60, n_xi: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentityConfig {
    pub base: f64,
    pub amplitude: f64,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        IdentityConfig { base: 0.8, amplitude: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("kcurv-out") }
    }
}

fn default_k() -> usize {
    2
}

fn default_mode() -> Mode {
    Mode::Solve
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_k")]
    pub k: usize,
    pub grid: GridConfig,
    pub prescription: PrescriptionConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub identity: IdentityConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parses without validating, so command-line overrides can be applied first.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        if table.get("solver").and_then(|s| s.get("k")).is_some() {
            return Err(invalid("solver.k", "set the curvature order with the top-level `k`"));
        }
        let mut cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.solver.k = cfg.k;
        Ok(cfg)
    }

    pub fn read_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let res = self.grid.resolution()?;
        let n = res.dim();
        if self.k == 0 || self.k > n {
            return Err(invalid("k", format!("need 1 <= k <= n = {n}, got {}", self.k)));
        }
        kcurv::grid::SphereGrid::new(res).map_err(|e| invalid("grid.resolution", e.to_string()))?;
        self.prescription.build()?;
        let mut solver = self.solver.clone();
        solver.k = self.k;
        solver.validate().map_err(|e| invalid("solver", e.to_string()))?;
        let a = &self.audit;
        if !(0.0 < a.r_lo && a.r_lo < a.r_hi && a.tau_max > 1.0 && a.n_r >= 2 && a.n_tau >= 2 && a.n_xi >= 1) {
            return Err(invalid("audit", "need 0 < r_lo < r_hi, tau_max > 1, n_r, n_tau >= 2, n_xi >= 1"));
        }
        if !(self.identity.base.is_finite() && self.identity.amplitude.is_finite()) {
            return Err(invalid("identity", "base and amplitude must be finite"));
        }
        Ok(())
    }

    /// Effective configuration as TOML, suitable for re-running.
    pub fn to_toml(&self) -> String {
        let mut value = toml::Value::try_from(self).expect("config serializes");
        if let Some(toml::Value::Table(s)) = value.get_mut("solver") {
            s.remove("k");
        }
        toml::to_string(&value).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg = RunConfig::from_toml(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    const MINIMAL: &str = r#"
[grid]
dim = 2
resolution = [16, 32]

[prescription]
name = "model"
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_str(MINIMAL).unwrap();
        assert_eq!(cfg.k, 2);
        assert_eq!(cfg.solver.p, 2.0);
        assert_eq!(cfg.solver.tol_newton, 1e-10);
        assert_eq!(cfg.mode, Mode::Solve);
    }

    #[test]
    fn k_above_dimension_is_rejected() {
        let err = parse_str(&format!("k = 5\n{MINIMAL}")).unwrap_err();
        assert!(err.to_string().contains("`k`"), "{err}");
    }

    #[test]
    fn duplicate_and_unknown_keys_are_rejected() {
        let dup = MINIMAL.replace("dim = 2", "dim = 2\ndim = 2");
        assert!(matches!(parse_str(&dup), Err(ConfigError::Parse(_))));
        let unknown = format!("{MINIMAL}\n[solver]\ntolerance = 1e-8\n");
        let err = parse_str(&unknown).unwrap_err();
        assert!(err.to_string().contains("tolerance"), "{err}");
        let param = format!("{MINIMAL}\n[prescription.params]\nbase = 0.5\nfoo = 1.0\n");
        let err = parse_str(&param).unwrap_err();
        assert!(err.to_string().contains("prescription.params.foo"), "{err}");
        assert!(parse_str(&format!("{MINIMAL}\n[solver]\nk = 1\n")).is_err());
    }

    #[test]
    fn missing_required_section_names_it() {
        let err = parse_str("[grid]\ndim = 1\nresolution = [32]\n").unwrap_err();
        assert!(err.to_string().contains("prescription"), "{err}");
    }

    #[test]
    fn echo_round_trips() {
        let cfg = parse_str(&format!("{MINIMAL}\n[prescription.params]\nvariation = 0.1\n")).unwrap();
        let again = parse_str(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn registry_builds_every_name() {
        for (name, _) in REGISTRY {
            let p = PrescriptionConfig { name: name.to_string(), params: BTreeMap::new() };
            assert_eq!(p.build().unwrap().name(), *name);
        }
        let bad = PrescriptionConfig { name: "nope".into(), params: BTreeMap::new() };
        assert!(bad.build().is_err());
    }
}
