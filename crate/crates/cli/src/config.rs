//! Run configuration: a TOML document with nested sections for the
//! potential, lattice, physics parameters, outputs and tolerances.
//! Tolerances can be overridden through `BOSEGAS_TOL_<NAME>` environment
//! variables.

use bosegas_core::potential::Potential;
use bosegas_core::{Error, Result};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialCfg {
    pub family: String,
    pub lambda: f64,
    pub sigma: Option<f64>,
    pub r0: Option<f64>,
    pub coeffs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LatticeCfg {
    /// Explicit box side (used by `energy`; `lhy-check` derives its own).
    pub l: Option<f64>,
    pub p_cut: Option<f64>,
    /// Infrared base resolution y₀ = (2π/L₀)²/(ρĝ₀) for derived boxes.
    pub y0: Option<f64>,
    /// Shell/continuum split in the same units.
    pub y_split: Option<f64>,
    /// Extrapolate over L₀, 2L₀, 4L₀ (default true).
    pub extrapolate: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RhoSpec {
    One(f64),
    Sweep(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsCfg {
    pub rho: RhoSpec,
    pub born_order: Option<u32>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputsCfg {
    pub directory: Option<String>,
    pub formats: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OracleCfg {
    pub draws: Option<usize>,
    pub n_max: Option<usize>,
    pub n_max_pairs: Option<usize>,
    pub c_max: Option<f64>,
    pub sqrt_n0_max: Option<f64>,
    pub box_side: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    potential: PotentialCfg,
    #[serde(default)]
    lattice: LatticeCfg,
    physics: PhysicsCfg,
    #[serde(default)]
    outputs: OutputsCfg,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    oracle: OracleCfg,
}

/// Validated configuration plus the SHA-256 of the raw config bytes.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub potential: PotentialCfg,
    pub lattice: LatticeCfg,
    pub physics: PhysicsCfg,
    pub outputs: OutputsCfg,
    pub tolerances: BTreeMap<String, f64>,
    pub oracle: OracleCfg,
    pub config_sha256: String,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let raw: RawConfig = toml::from_str(
            std::str::from_utf8(&bytes)
                .map_err(|e| Error::Config(format!("config is not UTF-8: {e}")))?,
        )
        .map_err(|e| Error::Config(format!("config parse failure: {e}")))?;

        use sha2::Digest;
        let mut hasher = sha2::Sha256::new();
        hasher.update(&bytes);
        let config_sha256 = format!("{:x}", hasher.finalize());

        let mut cfg = RunConfig {
            potential: raw.potential,
            lattice: raw.lattice,
            physics: raw.physics,
            outputs: raw.outputs,
            tolerances: raw.tolerances,
            oracle: raw.oracle,
            config_sha256,
        };
        cfg.apply_env_overrides();
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_env_overrides(&mut self) {
        for (key, val) in std::env::vars() {
            if let Some(name) = key.strip_prefix("BOSEGAS_TOL_") {
                if let Ok(parsed) = val.parse::<f64>() {
                    self.tolerances.insert(name.to_lowercase(), parsed);
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self.potential.family.as_str() {
            "gaussian" => {
                if self.potential.sigma.is_none() {
                    return Err(Error::Config("gaussian family needs `sigma`".into()));
                }
            }
            "polygauss" => {
                if self.potential.r0.is_none() || self.potential.coeffs.is_none() {
                    return Err(Error::Config(
                        "polygauss family needs `r0` and `coeffs`".into(),
                    ));
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown potential family '{other}' (expected gaussian | polygauss)"
                )))
            }
        }
        if self.potential.lambda < 0.0 {
            return Err(Error::Config("lambda must be nonnegative".into()));
        }
        if let RhoSpec::Sweep(list) = &self.physics.rho {
            if list.is_empty() {
                return Err(Error::Config("rho sweep list is empty".into()));
            }
            if list.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config(
                    "rho sweep list must be strictly increasing".into(),
                ));
            }
        }
        if let Some(order) = self.physics.born_order {
            if !(1..=3).contains(&order) {
                return Err(Error::Config("born_order must be 1, 2 or 3".into()));
            }
        }
        if let Some(fmts) = &self.outputs.formats {
            for f in fmts {
                if f != "csv" && f != "doc" {
                    return Err(Error::Config(format!(
                        "unknown output format '{f}' (expected csv | doc)"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn build_potential(&self) -> Result<Potential> {
        match self.potential.family.as_str() {
            "gaussian" => Potential::gaussian(self.potential.sigma.unwrap(), self.potential.lambda),
            "polygauss" => Potential::poly_gauss(
                self.potential.r0.unwrap(),
                self.potential.coeffs.clone().unwrap(),
                self.potential.lambda,
            ),
            _ => unreachable!("validated"),
        }
    }

    pub fn rhos(&self) -> Vec<f64> {
        match &self.physics.rho {
            RhoSpec::One(r) => vec![*r],
            RhoSpec::Sweep(list) => list.clone(),
        }
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }
}
