//! Element placement.
//!
//! An element at `x` sees its cascaded-phase distribution rotated by
//! `(2 pi x / lambda)(cos phi_sr + cos phi_rd)`. Placing element `i` at
//! `(i - 1) lambda / |cos phi_sr + cos phi_rd|` makes every rotation a multiple
//! of `2 pi`, so all elements share one phase distribution and one codebook.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::channel::{wrap_phase, ChannelDraw, LinkGeometry};
use crate::{Error, Result};

/// Below this `|cos phi_sr + cos phi_rd|` the aligned positions diverge.
pub const DEGENERATE_COS_SUM: f64 = 1e-6;

/// Positions of the movable elements along the array axis, meters, relative
/// to the first element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ElementLayout {
    positions: Vec<f64>,
}

impl ElementLayout {
    /// Checks that positions start at 0 and are strictly increasing.
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::invalid(
                "N",
                format!("need at least 2 elements, got {}", positions.len()),
            ));
        }
        if positions[0] != 0.0 {
            return Err(Error::invalid("positions", "first element must sit at 0"));
        }
        if let Some(w) = positions
            .windows(2)
            .find(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(Error::invalid(
                "positions",
                format!(
                    "must be finite and strictly increasing ({} then {})",
                    w[0], w[1]
                ),
            ));
        }
        Ok(ElementLayout { positions })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Distance from the first to the last element.
    pub fn aperture(&self) -> f64 {
        self.positions.last().copied().unwrap_or(0.0)
    }
}

impl TryFrom<Vec<f64>> for ElementLayout {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ElementLayout::new(v)
    }
}

impl From<ElementLayout> for Vec<f64> {
    fn from(l: ElementLayout) -> Self {
        l.positions
    }
}

fn check_count(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(
            "N",
            format!("need at least 2 elements, got {n}"),
        ));
    }
    Ok(())
}

/// Positions that cancel the phase-distribution offset for every element.
pub fn optimal_positions(n: usize, geometry: &LinkGeometry) -> Result<ElementLayout> {
    check_count(n)?;
    let c = geometry.cos_sum().abs();
    if !(c > DEGENERATE_COS_SUM) {
        return Err(Error::DegenerateGeometry {
            cos_sum_abs: c,
            threshold: DEGENERATE_COS_SUM,
        });
    }
    let spacing = geometry.lambda / c;
    ElementLayout::new((0..n).map(|i| i as f64 * spacing).collect())
}

/// Fixed quarter-wavelength layout of a conventional surface.
pub fn conventional_positions(n: usize, lambda: f64) -> Result<ElementLayout> {
    check_count(n)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(
            "lambda",
            format!("must be > 0, got {lambda}"),
        ));
    }
    ElementLayout::new((0..n).map(|i| i as f64 * lambda / 4.0).collect())
}

/// Offset of the cascaded-phase distribution of an element at `x` relative to
/// one at the origin, wrapped to `[-pi, pi)`.
pub fn phase_offset(x: f64, geometry: &LinkGeometry) -> f64 {
    wrap_phase(unwrapped_offset(x, geometry))
}

pub(crate) fn unwrapped_offset(x: f64, geometry: &LinkGeometry) -> f64 {
    TAU * x / geometry.lambda * geometry.cos_sum()
}

/// Total cascaded phase of each element, `wrap(arg h_i - offset_i)`: the
/// phase its shift has to cancel.
pub fn cascaded_phases(
    draw: &ChannelDraw,
    layout: &ElementLayout,
    geometry: &LinkGeometry,
) -> Vec<f64> {
    draw.phases
        .iter()
        .zip(layout.positions())
        .map(|(&p, &x)| wrap_phase(p - unwrapped_offset(x, geometry)))
        .collect()
}

/// True when every element's wrapped offset lies strictly inside `(-tol, tol)`.
pub fn verify_alignment(layout: &ElementLayout, geometry: &LinkGeometry, tol: f64) -> bool {
    layout
        .positions()
        .iter()
        .all(|&x| phase_offset(x, geometry).abs() < tol)
}

/// Returns a warning message when the layout exceeds `max_aperture` meters.
pub fn aperture_warning(layout: &ElementLayout, max_aperture: Option<f64>) -> Option<String> {
    let limit = max_aperture?;
    let a = layout.aperture();
    (a > limit).then(|| {
        format!("element layout spans {a:.3} m, beyond the configured aperture of {limit:.3} m")
    })
}
