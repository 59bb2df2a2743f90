//! Discrete phase-shift codebooks.
//!
//! A codebook is a sorted set of `M` shifts in `[-pi, pi)`. At runtime each
//! element picks the shift that brings its cascaded phase closest to zero
//! ([`quantize`]); [`design_codebook`] chooses the shifts from the phase
//! statistics of the Rician factor.

mod density;
mod design;

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::channel::wrap_phase;
use crate::{Error, Result};

pub use density::{
    amplitude_phase_density, joint_amplitude_phase_moment, rician_phase_pdf, small_angle_phase_pdf,
    Arc, DEFAULT_QUADRATURE_POINTS,
};
pub use design::{
    design_codebook, design_codebook_traced, evaluate_objective, lloyd_step, mean_rotated_gain,
    DesignTrace,
};

/// Selects the phase model and figure of merit used by [`design_codebook`].
///
/// The two resultant variants maximise `|E[w(h) e^{j(phi + Q(phi))}]|^2` under
/// the exact Rician phase law, with `w = |h|` or `w = 1`. `SmallAngleL1`
/// minimises the mean absolute residual phase `E|phi + Q(phi)|` under the
/// wrapped-Gaussian small-angle phase model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    AmplitudeWeighted,
    Unweighted,
    #[default]
    SmallAngleL1,
}

impl Weighting {
    /// True when a larger objective value is better.
    pub fn maximises(self) -> bool {
        !matches!(self, Weighting::SmallAngleL1)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::AmplitudeWeighted => "amplitude-weighted",
            Weighting::Unweighted => "unweighted",
            Weighting::SmallAngleL1 => "small-angle-l1",
        }
    }
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude-weighted" | "amplitude" => Ok(Weighting::AmplitudeWeighted),
            "unweighted" => Ok(Weighting::Unweighted),
            "small-angle-l1" => Ok(Weighting::SmallAngleL1),
            other => Err(Error::invalid(
                "weighting",
                format!("unknown variant `{other}` (expected amplitude-weighted, unweighted or small-angle-l1)"),
            )),
        }
    }
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where the Lloyd iteration starts.
///
/// `UniformGrid` starts from `{-pi + 2 pi m / M}`, which holds `-pi` (and `0`
/// for even `M`); the iteration then stays on codebooks that keep them.
/// `BestOfGrids` also runs from the grid rotated by `pi / M` and keeps the
/// better result. For concentrated phases that usually moves the `-pi` shift
/// into the bulk of the distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Start {
    #[default]
    UniformGrid,
    BestOfGrids,
}

impl Start {
    pub fn as_str(self) -> &'static str {
        match self {
            Start::UniformGrid => "uniform-grid",
            Start::BestOfGrids => "best-of-grids",
        }
    }
}

impl std::str::FromStr for Start {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-grid" => Ok(Start::UniformGrid),
            "best-of-grids" => Ok(Start::BestOfGrids),
            other => Err(Error::invalid(
                "start",
                format!("unknown start `{other}` (expected uniform-grid or best-of-grids)"),
            )),
        }
    }
}

impl std::fmt::Display for Start {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignConfig {
    pub m: usize,
    pub k: f64,
    pub weighting: Weighting,
    pub start: Start,
    /// Relative objective change that counts as converged.
    pub tol: f64,
    /// Largest shift movement (radians) allowed in a converged iteration.
    pub shift_tol: f64,
    pub max_iter: usize,
    pub quadrature_points: usize,
}

impl DesignConfig {
    pub fn new(k: f64, m: usize) -> Self {
        DesignConfig {
            m,
            k,
            weighting: Weighting::default(),
            start: Start::default(),
            tol: 1e-10,
            shift_tol: 1e-9,
            max_iter: 10_000,
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
        }
    }

    pub fn with_weighting(mut self, weighting: Weighting) -> Self {
        self.weighting = weighting;
        self
    }

    pub fn with_start(mut self, start: Start) -> Self {
        self.start = start;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::invalid(
                "M",
                format!("need at least 2 shifts, got {}", self.m),
            ));
        }
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return Err(Error::invalid(
                "K",
                format!("must be finite and >= 0, got {}", self.k),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "must be > 0"));
        }
        if !(self.shift_tol > 0.0) {
            return Err(Error::invalid("shift_tol", "must be > 0"));
        }
        if self.max_iter < 1 {
            return Err(Error::invalid("max_iter", "must be >= 1"));
        }
        if self.quadrature_points < 16 {
            return Err(Error::invalid("quadrature_points", "must be >= 16"));
        }
        Ok(())
    }
}

/// A set of discrete shifts, sorted ascending in `[-pi, pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodebookDocument", into = "CodebookDocument")]
pub struct PhaseCodebook {
    shifts: Vec<f64>,
    k: f64,
    weighting: Weighting,
    objective_value: f64,
    converged: bool,
}

impl PhaseCodebook {
    /// Builds a codebook from arbitrary shifts; they are wrapped and sorted.
    /// The objective is evaluated for `(k, weighting)`.
    pub fn from_shifts(shifts: Vec<f64>, k: f64, weighting: Weighting) -> Result<Self> {
        let shifts = normalise_shifts(shifts)?;
        let config = DesignConfig::new(k, shifts.len()).with_weighting(weighting);
        config.validate()?;
        let objective_value = evaluate_objective(&config, &shifts);
        Ok(PhaseCodebook {
            shifts,
            k,
            weighting,
            objective_value,
            converged: true,
        })
    }

    pub(crate) fn from_design(
        shifts: Vec<f64>,
        config: &DesignConfig,
        objective_value: f64,
        converged: bool,
    ) -> Result<Self> {
        Ok(PhaseCodebook {
            shifts: normalise_shifts(shifts)?,
            k: config.k,
            weighting: config.weighting,
            objective_value,
            converged,
        })
    }

    /// The conventional uniform grid `{-pi + 2 pi m / M}`.
    pub fn uniform(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid(
                "M",
                format!("need at least 2 shifts, got {m}"),
            ));
        }
        PhaseCodebook::from_shifts(uniform_grid(m), 0.0, Weighting::default())
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn objective_value(&self) -> f64 {
        self.objective_value
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn contains(&self, shift: f64, tol: f64) -> bool {
        self.shifts
            .iter()
            .any(|&s| circular_distance(s, shift) <= tol)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub(crate) fn uniform_grid(m: usize) -> Vec<f64> {
    (0..m).map(|i| -PI + TAU * i as f64 / m as f64).collect()
}

fn normalise_shifts(shifts: Vec<f64>) -> Result<Vec<f64>> {
    if shifts.len() < 2 {
        return Err(Error::invalid(
            "M",
            format!("need at least 2 shifts, got {}", shifts.len()),
        ));
    }
    if shifts.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("shifts", "must be finite"));
    }
    // `+ 0.0` turns -0.0 into 0.0
    let mut shifts: Vec<f64> = shifts.into_iter().map(|s| wrap_phase(s) + 0.0).collect();
    shifts.sort_by(f64::total_cmp);
    let wrapped_pair = [shifts[shifts.len() - 1], shifts[0]];
    if shifts
        .windows(2)
        .chain(std::iter::once(&wrapped_pair[..]))
        .any(|w| circular_distance(w[0], w[1]) < 1e-12)
    {
        return Err(Error::invalid("shifts", "must be distinct"));
    }
    Ok(shifts)
}

pub(crate) fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// On-disk form of a designed codebook.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookDocument {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub weighting: Weighting,
    pub shifts: Vec<f64>,
    pub objective_value: f64,
    pub converged: bool,
}

impl From<PhaseCodebook> for CodebookDocument {
    fn from(c: PhaseCodebook) -> Self {
        CodebookDocument {
            k: c.k,
            m: c.shifts.len(),
            weighting: c.weighting,
            shifts: c.shifts,
            objective_value: c.objective_value,
            converged: c.converged,
        }
    }
}

impl TryFrom<CodebookDocument> for PhaseCodebook {
    type Error = Error;

    fn try_from(d: CodebookDocument) -> Result<Self> {
        if d.m != d.shifts.len() {
            return Err(Error::LengthMismatch {
                what: "codebook shifts",
                expected: d.m,
                actual: d.shifts.len(),
            });
        }
        Ok(PhaseCodebook {
            shifts: normalise_shifts(d.shifts)?,
            k: d.k,
            weighting: d.weighting,
            objective_value: d.objective_value,
            converged: d.converged,
        })
    }
}

/// The shift minimising `|wrap(phi + theta)|`; ties go to the smaller shift.
pub fn quantize(phi: f64, codebook: &PhaseCodebook) -> f64 {
    let shifts = codebook.shifts();
    let target = wrap_phase(-phi);
    // the nearest shift to -phi on the circle is adjacent to its insertion
    // point, or one of the two ends across the wrap
    let idx = shifts.partition_point(|&s| s < target);
    let m = shifts.len();
    let candidates = [
        idx.checked_sub(1).unwrap_or(m - 1),
        idx.min(m - 1),
        0,
        m - 1,
    ];
    let mut best = shifts[candidates[0]];
    let mut best_err = wrap_phase(phi + best).abs();
    for &c in &candidates[1..] {
        let s = shifts[c];
        let err = wrap_phase(phi + s).abs();
        if err < best_err || (err == best_err && s < best) {
            best = s;
            best_err = err;
        }
    }
    best
}

/// Residual phase `wrap(phi + quantize(phi))`.
pub fn residual(phi: f64, codebook: &PhaseCodebook) -> f64 {
    wrap_phase(phi + quantize(phi, codebook))
}
