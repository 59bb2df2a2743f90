//! Experiment runner: JSON experiment specs, parameter sweeps over the four
//! beamforming schemes, CSV output and a quick self-check suite.

mod csv;
mod sweep;
pub mod validate;

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{dbm_to_watts, LinkGeometry};
use crate::codebook::{Start, Weighting};
use crate::{Error, Result};

pub use csv::{emit_csv, format_significant, write_csv, write_pdf_csv, CSV_HEADER};
pub use sweep::{run_sweep, run_sweep_with, ExperimentResult, ResultRow, RunMetadata};

/// Link geometry as written in config files, with units in the field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(rename = "P_s_dBm")]
    pub p_s_dbm: f64,
    #[serde(rename = "sigma2_dBm")]
    pub sigma2_dbm: f64,
    pub d_sr_m: f64,
    pub d_rd_m: f64,
    pub alpha: f64,
    pub beta0: f64,
    pub lambda_m: f64,
    pub phi_sr_rad: f64,
    pub phi_rd_rad: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        let g = LinkGeometry::reference();
        GeometryConfig {
            p_s_dbm: 30.0,
            sigma2_dbm: -110.0,
            d_sr_m: g.d_sr,
            d_rd_m: g.d_rd,
            alpha: g.alpha,
            beta0: g.beta0,
            lambda_m: g.lambda,
            phi_sr_rad: g.phi_sr,
            phi_rd_rad: g.phi_rd,
        }
    }
}

impl GeometryConfig {
    pub fn to_geometry(&self) -> LinkGeometry {
        LinkGeometry {
            d_sr: self.d_sr_m,
            d_rd: self.d_rd_m,
            alpha: self.alpha,
            lambda: self.lambda_m,
            phi_sr: self.phi_sr_rad,
            phi_rd: self.phi_rd_rad,
            p_s: dbm_to_watts(self.p_s_dbm),
            sigma2: dbm_to_watts(self.sigma2_dbm),
            beta0: self.beta0,
        }
    }
}

/// Scheme names as they appear in configs and CSV output. The derived order
/// is the row order within each sweep value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SchemeName {
    #[serde(rename = "CPS")]
    Cps,
    #[serde(rename = "PROPOSED")]
    Proposed,
    #[serde(rename = "ME_UDPS")]
    MeUdps,
    #[serde(rename = "C_UDPS")]
    CUdps,
}

impl SchemeName {
    pub const ALL: [SchemeName; 4] = [
        SchemeName::Cps,
        SchemeName::Proposed,
        SchemeName::MeUdps,
        SchemeName::CUdps,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeName::Cps => "CPS",
            SchemeName::Proposed => "PROPOSED",
            SchemeName::MeUdps => "ME_UDPS",
            SchemeName::CUdps => "C_UDPS",
        }
    }
}

impl std::fmt::Display for SchemeName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "N")]
    N,
    #[serde(rename = "d_rd")]
    DRd,
    #[serde(rename = "cos_sum")]
    CosSum,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::N => "N",
            SweepVariable::DRd => "d_rd",
            SweepVariable::CosSum => "cos_sum",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

/// `0.1, 0.2, ..., 1.5`.
pub fn default_cudps_angles() -> Vec<f64> {
    (1..=15).map(|i| i as f64 / 10.0).collect()
}

/// A full experiment. Every field has a default, so a config file only needs
/// to name what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub geometry: GeometryConfig,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "M")]
    pub m: usize,
    /// Element count when the sweep variable is not `N`.
    #[serde(rename = "N")]
    pub n: usize,
    pub weighting: Weighting,
    /// Starting point of the codebook design.
    pub design_start: Start,
    pub schemes: Vec<SchemeName>,
    pub sweep: SweepSpec,
    pub trials: u64,
    pub seed: u64,
    pub cudps_angle_sweep: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_aperture_m: Option<f64>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            geometry: GeometryConfig::default(),
            k: 4.0,
            m: 4,
            n: 50,
            weighting: Weighting::default(),
            design_start: Start::default(),
            schemes: SchemeName::ALL.to_vec(),
            sweep: SweepSpec {
                variable: SweepVariable::N,
                values: vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0],
            },
            trials: 10_000,
            seed: 0,
            cudps_angle_sweep: default_cudps_angles(),
            max_aperture_m: None,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentSpec {
    /// Parses and validates a JSON spec.
    pub fn from_json(s: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            serde_json::from_str(s).map_err(|e| config_err(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => config_err(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry
            .to_geometry()
            .validate()
            .map_err(|e| config_err(format!("geometry: {e}")))?;
        if !(self.k.is_finite() && self.k >= 0.0) {
            return Err(config_err(format!(
                "K must be finite and >= 0, got {}",
                self.k
            )));
        }
        if self.m < 2 {
            return Err(config_err(format!("M must be >= 2, got {}", self.m)));
        }
        if self.n < 2 {
            return Err(config_err(format!("N must be >= 2, got {}", self.n)));
        }
        if self.trials < 1 {
            return Err(config_err("trials must be >= 1"));
        }
        if self.schemes.is_empty() {
            return Err(config_err("schemes must not be empty"));
        }
        let mut names = self.schemes.clone();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_err("schemes must not repeat"));
        }
        let values = &self.sweep.values;
        if values.is_empty() {
            return Err(config_err("sweep.values must not be empty"));
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_err("sweep.values must not repeat"));
        }
        for &v in values {
            let ok = v.is_finite()
                && match self.sweep.variable {
                    SweepVariable::N => v >= 2.0 && v.fract() == 0.0,
                    SweepVariable::DRd => v > 0.0,
                    SweepVariable::CosSum => v.abs() <= 2.0,
                };
            if !ok {
                return Err(config_err(format!(
                    "sweep value {v} is not valid for `{}`",
                    self.sweep.variable.as_str()
                )));
            }
        }
        if self.schemes.contains(&SchemeName::CUdps) && self.cudps_angle_sweep.is_empty() {
            return Err(config_err("cudps_angle_sweep must not be empty"));
        }
        if let Some(&c) = self.cudps_angle_sweep.iter().find(|c| !(c.abs() <= 2.0)) {
            return Err(config_err(format!(
                "cudps_angle_sweep value {c} is outside [-2, 2]"
            )));
        }
        if let Some(a) = self.max_aperture_m {
            if !(a > 0.0) {
                return Err(config_err(format!("max_aperture_m must be > 0, got {a}")));
            }
        }
        Ok(())
    }
}
