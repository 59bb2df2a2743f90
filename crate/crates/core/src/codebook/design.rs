//! Circular Lloyd iteration for codebook design.
//!
//! Shift `theta_m` serves the phases nearest to `-theta_m`. Each iteration
//! partitions the circle into those cells (midpoints between neighbouring
//! cell centres), then moves every shift to the optimum for its cell:
//!
//! - resultant variants: `theta_m = -arg(integral of w(h) e^{j phi} over the
//!   cell)`, which makes every cell's rotated resultant real and positive;
//! - `SmallAngleL1`: `-theta_m` becomes the median of the cell.
//!
//! Both steps are optimal given the other, so the objective is monotone. The
//! densities are even and both starting grids are closed under negation, so
//! iterates are projected back onto the start's negation pairing to stop
//! rounding from drifting the solution off its symmetric fixed point.
//!
//! The uniform grid keeps a shift at -pi, the anti-mode of the density. Its
//! fixed point can be a saddle, so [`Start::BestOfGrids`] also runs the grid
//! rotated by pi/M and keeps the better objective.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::density::{
    amplitude_phase_density, arc_nodes, peak_halfwidth, rician_phase_pdf, small_angle_phase_pdf,
    Arc, Node,
};
use super::{circular_distance, uniform_grid, DesignConfig, PhaseCodebook, Start, Weighting};
use crate::channel::wrap_phase;
use crate::Result;

/// Objective value after every iteration, plus the final codebook.
#[derive(Debug, Clone)]
pub struct DesignTrace {
    pub codebook: PhaseCodebook,
    /// Objective of the iterate entering each iteration, in order.
    pub history: Vec<f64>,
    pub iterations: usize,
}

struct Cell {
    label: usize,
    centre: f64,
    arc: Arc,
}

/// Cells induced by `shifts`: the arc of phases whose nearest `-theta` is the
/// labelled shift.
fn partition(shifts: &[f64]) -> Vec<Cell> {
    let mut order: Vec<(usize, f64)> = shifts
        .iter()
        .enumerate()
        .map(|(i, &s)| (i, wrap_phase(-s)))
        .collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let m = order.len();
    (0..m)
        .map(|j| {
            let (label, c) = order[j];
            let mut prev = order[(j + m - 1) % m].1;
            let mut next = order[(j + 1) % m].1;
            if j == 0 {
                prev -= TAU;
            }
            if j == m - 1 {
                next += TAU;
            }
            Cell {
                label,
                centre: c,
                arc: Arc::new((prev + c) / 2.0, (c + next) / 2.0),
            }
        })
        .collect()
}

fn density_for(weighting: Weighting, k: f64) -> impl Fn(f64) -> f64 {
    move |t| match weighting {
        Weighting::AmplitudeWeighted => amplitude_phase_density(k, t),
        Weighting::Unweighted => rician_phase_pdf(k, t),
        Weighting::SmallAngleL1 => small_angle_phase_pdf(k, t),
    }
}

/// Per-cell quadrature results for one partition.
struct CellStats {
    label: usize,
    centre: f64,
    /// Integral of `d(phi) e^{j phi}` over the cell (resultant variants).
    resultant: Complex64,
    /// Integral of `d(phi) |phi - centre|` over the cell (L1 variant).
    abs_error: f64,
    /// Median of `d` over the cell (L1 variant).
    median: f64,
}

fn cell_stats(config: &DesignConfig, cells: &[Cell]) -> Vec<CellStats> {
    let density = density_for(config.weighting, config.k);
    let peak = peak_halfwidth(config.k);
    cells
        .iter()
        .map(|cell| {
            let nodes = arc_nodes(cell.arc, config.quadrature_points, peak);
            let masses: Vec<f64> = nodes.iter().map(|n| density(n.t) * n.w).collect();
            let (resultant, abs_error, median) = match config.weighting {
                Weighting::SmallAngleL1 => {
                    let abs_error = nodes
                        .iter()
                        .zip(&masses)
                        .map(|(n, m)| (n.t - cell.centre).abs() * m)
                        .sum();
                    let median = weighted_median(&nodes, &masses).unwrap_or(cell.centre);
                    (Complex64::new(0.0, 0.0), abs_error, median)
                }
                _ => {
                    let r = nodes
                        .iter()
                        .zip(&masses)
                        .map(|(n, &m)| Complex64::from_polar(m, n.t))
                        .sum();
                    (r, 0.0, cell.centre)
                }
            };
            CellStats {
                label: cell.label,
                centre: cell.centre,
                resultant,
                abs_error,
                median,
            }
        })
        .collect()
}

/// Median of a piecewise-constant density given by midpoint masses; linear
/// within the panel that crosses half the mass.
fn weighted_median(nodes: &[Node], masses: &[f64]) -> Option<f64> {
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let half = total / 2.0;
    let mut acc = 0.0;
    for (n, &m) in nodes.iter().zip(masses) {
        if acc + m >= half && m > 0.0 {
            let frac = (half - acc) / m;
            return Some(n.t - n.w / 2.0 + frac * n.w);
        }
        acc += m;
    }
    nodes.last().map(|n| n.t + n.w / 2.0)
}

fn objective_from_stats(weighting: Weighting, shifts: &[f64], stats: &[CellStats]) -> f64 {
    match weighting {
        Weighting::SmallAngleL1 => stats.iter().map(|s| s.abs_error).sum(),
        _ => stats
            .iter()
            .map(|s| Complex64::from_polar(1.0, shifts[s.label]) * s.resultant)
            .sum::<Complex64>()
            .norm_sqr(),
    }
}

/// Objective of `shifts` under the quantiser they induce.
///
/// Resultant variants: `|E[w(h) e^{j(phi + Q(phi))}]|^2` (larger is better).
/// `SmallAngleL1`: `E|phi + Q(phi)|` in radians (smaller is better).
pub fn evaluate_objective(config: &DesignConfig, shifts: &[f64]) -> f64 {
    let stats = cell_stats(config, &partition(shifts));
    objective_from_stats(config.weighting, shifts, &stats)
}

fn centroid_update(weighting: Weighting, shifts: &[f64], stats: &[CellStats]) -> Vec<f64> {
    let mut next = shifts.to_vec();
    for s in stats {
        next[s.label] = match weighting {
            Weighting::SmallAngleL1 => wrap_phase(-s.median),
            _ if s.resultant.norm() > 0.0 => wrap_phase(-s.resultant.arg()),
            // empty cell keeps its shift
            _ => wrap_phase(-s.centre),
        };
    }
    next
}

/// For a codebook closed under negation, `pairs[i]` is the label of
/// `-shifts[i]`. `None` when the codebook is not symmetric.
fn negation_pairs(shifts: &[f64]) -> Option<Vec<usize>> {
    shifts
        .iter()
        .map(|&s| shifts.iter().position(|&t| circular_distance(s, -t) < 1e-9))
        .collect()
}

/// Projects labelled shifts onto the negation-symmetric codebooks with the
/// given pairing.
fn symmetrise(shifts: &mut [f64], pairs: &[usize]) {
    for i in 0..shifts.len() {
        let j = pairs[i];
        if j < i {
            continue;
        }
        let mismatch = wrap_phase(shifts[i] + shifts[j]);
        shifts[i] = wrap_phase(shifts[i] - mismatch / 2.0);
        shifts[j] = wrap_phase(-shifts[i]);
    }
}

/// One partition + centroid step from `shifts` (any order). Returns the new
/// shifts sorted ascending. A negation-symmetric input is projected back onto
/// symmetric codebooks, as in [`design_codebook`].
pub fn lloyd_step(config: &DesignConfig, shifts: &[f64]) -> Vec<f64> {
    let stats = cell_stats(config, &partition(shifts));
    let mut next = centroid_update(config.weighting, shifts, &stats);
    if let Some(pairs) = negation_pairs(shifts) {
        symmetrise(&mut next, &pairs);
    }
    next.sort_by(f64::total_cmp);
    next
}

/// `E[|h| e^{j(phi + Q(phi))}]` for the quantiser of `codebook` under the
/// exact Rician law with factor `k`.
pub fn mean_rotated_gain(k: f64, codebook: &PhaseCodebook, quadrature_points: usize) -> Complex64 {
    let peak = peak_halfwidth(k);
    let shifts = codebook.shifts();
    partition(shifts)
        .iter()
        .map(|cell| {
            let theta = shifts[cell.label];
            arc_nodes(cell.arc, quadrature_points, peak)
                .iter()
                .map(|n| Complex64::from_polar(amplitude_phase_density(k, n.t) * n.w, n.t + theta))
                .sum::<Complex64>()
        })
        .sum()
}

pub fn design_codebook(config: &DesignConfig) -> Result<PhaseCodebook> {
    design_codebook_traced(config).map(|t| t.codebook)
}

pub fn design_codebook_traced(config: &DesignConfig) -> Result<DesignTrace> {
    config.validate()?;
    let grid = iterate_from(config, uniform_grid(config.m))?;
    if config.start == Start::UniformGrid {
        return Ok(grid);
    }
    let half_step = PI / config.m as f64;
    let rotated = uniform_grid(config.m)
        .iter()
        .map(|&s| wrap_phase(s + half_step))
        .collect();
    let rotated = iterate_from(config, rotated)?;
    let (a, b) = (
        grid.codebook.objective_value(),
        rotated.codebook.objective_value(),
    );
    let take_rotated = if config.weighting.maximises() {
        b > a
    } else {
        b < a
    };
    Ok(if take_rotated { rotated } else { grid })
}

fn iterate_from(config: &DesignConfig, start: Vec<f64>) -> Result<DesignTrace> {
    let weighting = config.weighting;
    let better = |a: f64, b: f64| if weighting.maximises() { a > b } else { a < b };

    let pairs = negation_pairs(&start);
    let mut shifts = start;
    let mut history = Vec::new();
    let mut best = (shifts.clone(), f64::NAN);
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..config.max_iter {
        iterations += 1;
        let stats = cell_stats(config, &partition(&shifts));
        let objective = objective_from_stats(weighting, &shifts, &stats);
        if best.1.is_nan() || better(objective, best.1) {
            best = (shifts.clone(), objective);
        }
        let previous = history.last().copied();
        history.push(objective);

        let mut next = centroid_update(weighting, &shifts, &stats);
        if let Some(pairs) = &pairs {
            symmetrise(&mut next, pairs);
        }
        let step = shifts
            .iter()
            .zip(&next)
            .map(|(&a, &b)| circular_distance(a, b))
            .fold(0.0, f64::max);

        let settled = previous.is_some_and(|prev| {
            let scale = objective.abs().max(f64::MIN_POSITIVE);
            (objective - prev).abs() <= config.tol * scale && step <= config.shift_tol
        });
        if settled || step == 0.0 {
            converged = true;
            best = (shifts, objective);
            break;
        }
        shifts = next;
    }

    if !converged {
        log::warn!(
            "codebook design (K={}, M={}, {}) stopped after {} iterations without converging",
            config.k,
            config.m,
            weighting,
            iterations
        );
    }
    let (shifts, objective) = best;
    Ok(DesignTrace {
        codebook: PhaseCodebook::from_design(shifts, config, objective, converged)?,
        history,
        iterations,
    })
}
