use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::{ExperimentSpec, SchemeName, SweepVariable};
use crate::channel::{LinkGeometry, RicianSpec};
use crate::codebook::{design_codebook, DesignConfig, PhaseCodebook};
use crate::exec::Execution;
use crate::placement::{aperture_warning, optimal_positions};
use crate::rate::{average_rate_mc_with, RateEstimate, SchemeKind};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub scheme: SchemeName,
    pub estimate: RateEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub spec_hash: String,
    /// The designed codebook, when PROPOSED was run.
    pub codebook: Option<PhaseCodebook>,
    pub timestamp_unix_s: u64,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub sweep_variable: SweepVariable,
    /// Sorted by sweep value, then scheme.
    pub rows: Vec<ResultRow>,
    pub metadata: RunMetadata,
}

impl ExperimentResult {
    pub fn row(&self, value: f64, scheme: SchemeName) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.sweep_value == value && r.scheme == scheme)
    }
}

pub fn run_sweep(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    run_sweep_with(spec, Execution::default())
}

/// Runs every (sweep value, scheme) cell. All cells share the spec's seed, so
/// schemes are compared on the same channel realizations.
pub fn run_sweep_with(spec: &ExperimentSpec, exec: Execution) -> Result<ExperimentResult> {
    spec.validate()?;
    let codebook = if spec.schemes.contains(&SchemeName::Proposed) {
        let cb = design_codebook(
            &DesignConfig::new(spec.k, spec.m)
                .with_weighting(spec.weighting)
                .with_start(spec.design_start),
        )?;
        Some(cb)
    } else {
        None
    };
    let base = spec.geometry.to_geometry();
    let variable = spec.sweep.variable;
    let mut schemes = spec.schemes.clone();
    schemes.sort();

    let mut rows = Vec::with_capacity(spec.sweep.values.len() * schemes.len());
    for &value in &spec.sweep.values {
        for &scheme in &schemes {
            let estimate =
                run_cell(spec, &base, codebook.as_ref(), scheme, value, exec).map_err(|e| {
                    Error::Sweep {
                        variable: variable.as_str().to_string(),
                        value,
                        source: Box::new(e),
                    }
                })?;
            rows.push(ResultRow {
                sweep_value: value,
                scheme,
                estimate,
            });
        }
    }
    rows.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then(a.scheme.cmp(&b.scheme))
    });

    Ok(ExperimentResult {
        sweep_variable: variable,
        rows,
        metadata: RunMetadata {
            spec_hash: spec.hash(),
            codebook,
            timestamp_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}

fn run_cell(
    spec: &ExperimentSpec,
    base: &LinkGeometry,
    codebook: Option<&PhaseCodebook>,
    scheme: SchemeName,
    value: f64,
    exec: Execution,
) -> Result<RateEstimate> {
    let mut geometry = *base;
    let mut n = spec.n;
    match spec.sweep.variable {
        SweepVariable::N => n = value as usize,
        SweepVariable::DRd => geometry = geometry.with_d_rd(value),
        SweepVariable::CosSum => geometry = geometry.with_cos_sum(value)?,
    }
    let rician = RicianSpec::new(spec.k, n)?;

    let kind = match scheme {
        SchemeName::Cps => SchemeKind::Cps,
        SchemeName::Proposed => SchemeKind::Proposed {
            codebook: codebook.expect("codebook designed for PROPOSED").clone(),
        },
        SchemeName::MeUdps => SchemeKind::me_udps(spec.m)?,
        SchemeName::CUdps => {
            let angles = if spec.sweep.variable == SweepVariable::CosSum {
                vec![value]
            } else {
                spec.cudps_angle_sweep.clone()
            };
            return c_udps_average(spec, &rician, &geometry, &angles, exec);
        }
    };
    if let Some(msg) = aperture_warning(&optimal_positions(n, &geometry)?, spec.max_aperture_m) {
        log::warn!(
            "{} at {}={value}: {msg}",
            scheme,
            spec.sweep.variable.as_str()
        );
    }
    average_rate_mc_with(&kind, &rician, &geometry, spec.trials, spec.seed, exec)
}

/// Equal-weight average over the cos-sum values. The reported half-width is
/// the mean of the per-angle half-widths.
fn c_udps_average(
    spec: &ExperimentSpec,
    rician: &RicianSpec,
    geometry: &LinkGeometry,
    angles: &[f64],
    exec: Execution,
) -> Result<RateEstimate> {
    let kind = SchemeKind::c_udps(spec.m, rician.n, geometry.lambda)?;
    let mut mean = 0.0;
    let mut half = 0.0;
    for &c in angles {
        let g = geometry.with_cos_sum(c)?;
        let est = average_rate_mc_with(&kind, rician, &g, spec.trials, spec.seed, exec)?;
        mean += est.mean;
        half += est.half_ci95;
    }
    let count = angles.len() as f64;
    Ok(RateEstimate {
        mean: mean / count,
        half_ci95: half / count,
        trials: spec.trials,
        seed: spec.seed,
    })
}
