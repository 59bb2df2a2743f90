//! Receive SNR, Monte Carlo average rate and the Jensen upper bound.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{
    draw_channel, snr_prefactor, trial_rng, ChannelDraw, LinkGeometry, RicianSpec,
};
use crate::codebook::{mean_rotated_gain, quantize, PhaseCodebook, DEFAULT_QUADRATURE_POINTS};
use crate::exec::Execution;
use crate::placement::{
    conventional_positions, optimal_positions, unwrapped_offset, ElementLayout,
};
use crate::{Error, Result};

/// 95% two-sided normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Beamforming scheme under evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeKind {
    /// Continuous shifts, perfectly co-phased.
    Cps,
    /// Offset-free movable layout with a designed non-uniform codebook.
    Proposed { codebook: PhaseCodebook },
    /// Offset-free movable layout with the uniform codebook.
    MeUdps { codebook: PhaseCodebook },
    /// Fixed quarter-wavelength layout with the uniform codebook.
    CUdps {
        codebook: PhaseCodebook,
        layout: ElementLayout,
    },
}

impl SchemeKind {
    pub fn me_udps(m: usize) -> Result<Self> {
        Ok(SchemeKind::MeUdps {
            codebook: PhaseCodebook::uniform(m)?,
        })
    }

    pub fn c_udps(m: usize, n: usize, lambda: f64) -> Result<Self> {
        Ok(SchemeKind::CUdps {
            codebook: PhaseCodebook::uniform(m)?,
            layout: conventional_positions(n, lambda)?,
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            SchemeKind::Cps => "CPS",
            SchemeKind::Proposed { .. } => "PROPOSED",
            SchemeKind::MeUdps { .. } => "ME_UDPS",
            SchemeKind::CUdps { .. } => "C_UDPS",
        }
    }

    pub fn codebook(&self) -> Option<&PhaseCodebook> {
        match self {
            SchemeKind::Cps => None,
            SchemeKind::Proposed { codebook }
            | SchemeKind::MeUdps { codebook }
            | SchemeKind::CUdps { codebook, .. } => Some(codebook),
        }
    }

    /// The element layout this scheme places for `n` elements.
    pub fn layout(&self, n: usize, geometry: &LinkGeometry) -> Result<ElementLayout> {
        match self {
            SchemeKind::CUdps { layout, .. } => {
                if layout.len() != n {
                    return Err(Error::LengthMismatch {
                        what: "C_UDPS layout",
                        expected: n,
                        actual: layout.len(),
                    });
                }
                Ok(layout.clone())
            }
            _ => optimal_positions(n, geometry),
        }
    }
}

/// Mean rate with a normal-approximation 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub mean: f64,
    pub half_ci95: f64,
    pub trials: u64,
    pub seed: u64,
}

impl RateEstimate {
    /// Mean and CI of per-trial samples, summed in index order.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let half_ci95 = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            Z95 * (var / n as f64).sqrt()
        } else {
            0.0
        };
        RateEstimate {
            mean,
            half_ci95,
            trials: n as u64,
            seed,
        }
    }
}

fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}

/// SNR with explicit per-element shifts, including each element's
/// phase-distribution offset.
pub fn snr_general(
    draw: &ChannelDraw,
    layout: &ElementLayout,
    shifts: &[f64],
    geometry: &LinkGeometry,
) -> Result<f64> {
    check_len("element layout", draw.len(), layout.len())?;
    check_len("phase shifts", draw.len(), shifts.len())?;
    let sum: Complex64 = draw
        .gains
        .iter()
        .zip(&draw.phases)
        .zip(layout.positions().iter().zip(shifts))
        .map(|((h, &phase), (&x, &theta))| {
            Complex64::from_polar(h.norm(), phase - unwrapped_offset(x, geometry) + theta)
        })
        .sum();
    Ok(snr_prefactor(geometry) * sum.norm_sqr())
}

/// SNR on an offset-free layout with shifts chosen by [`quantize`].
pub fn snr_aligned_dps(
    draw: &ChannelDraw,
    codebook: &PhaseCodebook,
    geometry: &LinkGeometry,
) -> f64 {
    let sum: Complex64 = draw
        .gains
        .iter()
        .zip(&draw.phases)
        .map(|(h, &phase)| Complex64::from_polar(h.norm(), phase + quantize(phase, codebook)))
        .sum();
    snr_prefactor(geometry) * sum.norm_sqr()
}

/// SNR with ideal continuous co-phasing: `prefactor * (sum |h_i|)^2`.
pub fn snr_cps(draw: &ChannelDraw, geometry: &LinkGeometry) -> f64 {
    let amp: f64 = draw.gains.iter().map(|h| h.norm()).sum();
    snr_prefactor(geometry) * amp * amp
}

/// Shifts a conventional surface applies: each element quantises its full
/// cascaded phase, offset included.
pub fn conventional_shifts(
    draw: &ChannelDraw,
    layout: &ElementLayout,
    codebook: &PhaseCodebook,
    geometry: &LinkGeometry,
) -> Vec<f64> {
    draw.phases
        .iter()
        .zip(layout.positions())
        .map(|(&phase, &x)| quantize(phase - unwrapped_offset(x, geometry), codebook))
        .collect()
}

fn scheme_snr(
    scheme: &SchemeKind,
    draw: &ChannelDraw,
    layout: &ElementLayout,
    geometry: &LinkGeometry,
) -> Result<f64> {
    Ok(match scheme {
        SchemeKind::Cps => snr_cps(draw, geometry),
        SchemeKind::Proposed { codebook } | SchemeKind::MeUdps { codebook } => {
            snr_aligned_dps(draw, codebook, geometry)
        }
        SchemeKind::CUdps { codebook, .. } => {
            let shifts = conventional_shifts(draw, layout, codebook, geometry);
            snr_general(draw, layout, &shifts, geometry)?
        }
    })
}

pub fn rate_bits(snr: f64) -> f64 {
    snr.ln_1p() / LN_2
}

/// Mean of `log2(1 + snr)` over `trials` independent channel draws.
pub fn average_rate_mc(
    scheme: &SchemeKind,
    spec: &RicianSpec,
    geometry: &LinkGeometry,
    trials: u64,
    seed: u64,
) -> Result<RateEstimate> {
    average_rate_mc_with(scheme, spec, geometry, trials, seed, Execution::default())
}

pub fn average_rate_mc_with(
    scheme: &SchemeKind,
    spec: &RicianSpec,
    geometry: &LinkGeometry,
    trials: u64,
    seed: u64,
    exec: Execution,
) -> Result<RateEstimate> {
    if trials < 1 {
        return Err(Error::invalid("trials", "must be >= 1"));
    }
    geometry.validate()?;
    let layout = scheme.layout(spec.n, geometry)?;
    let samples = exec.map_indexed(trials as usize, |t| -> Result<f64> {
        let mut rng = trial_rng(seed, t as u64);
        let draw = draw_channel(spec, &layout, geometry, &mut rng)?;
        Ok(rate_bits(scheme_snr(scheme, &draw, &layout, geometry)?))
    });
    let samples = samples.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(RateEstimate::from_samples(&samples, seed))
}

/// `E|sum_i |h_i| e^{j phi_i}|^2` for i.i.d. elements:
/// `N E|z|^2 + N (N - 1) |E z|^2` with `E|z|^2 = E|h|^2 = 1`.
pub fn expected_array_gain(spec: &RicianSpec, codebook: &PhaseCodebook) -> Result<f64> {
    array_gain_with(spec, codebook, DEFAULT_QUADRATURE_POINTS)
}

fn array_gain_with(spec: &RicianSpec, codebook: &PhaseCodebook, points: usize) -> Result<f64> {
    let coarse = mean_rotated_gain(spec.k, codebook, points);
    let fine = mean_rotated_gain(spec.k, codebook, 2 * points);
    let diff = (coarse - fine).norm();
    if !(diff <= 1e-6) {
        return Err(Error::Quadrature(format!(
            "E[z] changed by {diff:e} when doubling nodes (K={}, M={}): {coarse} vs {fine}",
            spec.k,
            codebook.len()
        )));
    }
    // midpoint error is O(h^2)
    let ez = (4.0 * fine - coarse) / 3.0;
    let n = spec.n as f64;
    Ok(n + n * (n - 1.0) * ez.norm_sqr())
}

/// Jensen bound `log2(1 + prefactor * E|sum_i |h_i| e^{j phi_i}|^2)`.
pub fn rate_upper_bound(
    spec: &RicianSpec,
    codebook: &PhaseCodebook,
    geometry: &LinkGeometry,
) -> Result<f64> {
    geometry.validate()?;
    Ok(rate_bits(
        snr_prefactor(geometry) * expected_array_gain(spec, codebook)?,
    ))
}
