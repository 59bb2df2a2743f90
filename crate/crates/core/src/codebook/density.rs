//! Phase densities of the cascaded gain and quadrature over circular arcs.
//!
//! With `s = sqrt(K/(K+1))`, `sigma^2 = 1/(K+1)` and `b = sqrt(K) cos(phi)`,
//! the joint density of `(|h|, arg h)` integrates in closed form:
//!
//! ```text
//! f(phi)        = e^{-K}/(2 pi) + b e^{b^2-K} (1 + erf b) / (2 sqrt(pi))
//! E[|h|; phi]   = sigma/pi * ( b e^{-K}/2 + sqrt(pi)/4 (1 + 2 b^2) e^{b^2-K} (1 + erf b) )
//! ```
//!
//! `1 + erf b` is evaluated as `erfc(-b)` to keep precision when `b << 0`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use statrs::function::erf::erfc;

use crate::channel::wrap_phase;

/// Default node count per quadrature panel.
pub const DEFAULT_QUADRATURE_POINTS: usize = 4096;

/// Density of `arg h` for a unit-power Rician gain with factor `k`.
pub fn rician_phase_pdf(k: f64, phi: f64) -> f64 {
    if k == 0.0 {
        return 1.0 / TAU;
    }
    let phi = wrap_phase(phi);
    let b = k.sqrt() * phi.cos();
    let tail = (-k * phi.sin().powi(2)).exp() * erfc(-b);
    (-k).exp() / TAU + b * tail / (2.0 * PI.sqrt())
}

/// `E[|h| ; arg h = phi]`: the phase density multiplied by the conditional
/// mean amplitude. Integrates to `E|h|` over the circle.
pub fn amplitude_phase_density(k: f64, phi: f64) -> f64 {
    let sigma = (1.0 / (k + 1.0)).sqrt();
    let phi = wrap_phase(phi);
    let b = k.sqrt() * phi.cos();
    let tail = (-k * phi.sin().powi(2)).exp() * erfc(-b);
    sigma / PI * (b * (-k).exp() / 2.0 + PI.sqrt() / 4.0 * (1.0 + 2.0 * b * b) * tail)
}

/// Small-angle model of the phase: a wrapped Gaussian with variance
/// `1 / (2K)`, i.e. `arg h ~ Im(n) / s` for a strong LoS term. Uniform at
/// `K = 0`.
pub fn small_angle_phase_pdf(k: f64, phi: f64) -> f64 {
    if k == 0.0 {
        return 1.0 / TAU;
    }
    let var = 1.0 / (2.0 * k);
    let phi = wrap_phase(phi);
    if var < 1.0 {
        let norm = 1.0 / (TAU * var).sqrt();
        (-3..=3)
            .map(|j| {
                let t = phi + TAU * j as f64;
                (-t * t / (2.0 * var)).exp()
            })
            .sum::<f64>()
            * norm
    } else {
        // Fourier form converges fast for wide distributions
        let mut s = 1.0;
        for n in 1..64 {
            let n = n as f64;
            let c = (-n * n * var / 2.0).exp();
            if c < 1e-18 {
                break;
            }
            s += 2.0 * c * (n * phi).cos();
        }
        s / TAU
    }
}

/// Half-width of the refined panel placed around phase 0, where all of the
/// densities above concentrate for large `K`.
pub(crate) fn peak_halfwidth(k: f64) -> f64 {
    if k <= 0.0 {
        PI
    } else {
        (12.0 / (2.0 * k).sqrt()).min(PI)
    }
}

/// A counter-clockwise arc `[start, end]` on the unwrapped real line, with
/// `0 <= end - start <= 2 pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub start: f64,
    pub end: f64,
}

impl Arc {
    pub fn new(start: f64, end: f64) -> Self {
        debug_assert!(end >= start && end - start <= TAU + 1e-12);
        Arc { start, end }
    }

    pub fn full() -> Self {
        Arc::new(-PI, PI)
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// A quadrature node: abscissa on the unwrapped arc and panel width.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    pub t: f64,
    pub w: f64,
}

/// Composite midpoint nodes over an arc, with `points` nodes per panel.
/// Panels are split at `2 pi j +- peak` so a narrow peak at 0 gets its own
/// panel.
pub(crate) fn arc_nodes(arc: Arc, points: usize, peak: f64) -> Vec<Node> {
    if arc.is_empty() || points == 0 {
        return Vec::new();
    }
    let mut cuts = vec![arc.start, arc.end];
    if peak < PI {
        for j in -2..=2 {
            let centre = TAU * j as f64;
            for c in [centre - peak, centre + peak] {
                if c > arc.start && c < arc.end {
                    cuts.push(c);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut nodes = Vec::with_capacity(points * (cuts.len() - 1));
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let h = (b - a) / points as f64;
        if h <= 0.0 {
            continue;
        }
        nodes.extend((0..points).map(|i| Node {
            t: a + (i as f64 + 0.5) * h,
            w: h,
        }));
    }
    nodes
}

/// `E[w(h) e^{j arg h} 1{arg h in arc}]` with `w = |h|` when
/// `amplitude_weighted`, else `w = 1`.
pub fn joint_amplitude_phase_moment(
    k: f64,
    arc: Arc,
    amplitude_weighted: bool,
    quadrature_points: usize,
) -> Complex64 {
    let density = |t: f64| {
        if amplitude_weighted {
            amplitude_phase_density(k, t)
        } else {
            rician_phase_pdf(k, t)
        }
    };
    arc_nodes(arc, quadrature_points, peak_halfwidth(k))
        .iter()
        .map(|n| Complex64::from_polar(density(n.t) * n.w, n.t))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn integrate(f: impl Fn(f64) -> f64, k: f64) -> f64 {
        arc_nodes(Arc::full(), 1 << 14, peak_halfwidth(k))
            .iter()
            .map(|n| f(n.t) * n.w)
            .sum()
    }

    #[test]
    fn rayleigh_phase_is_flat() {
        for phi in [-3.0, -1.0, 0.0, 0.5, 3.1] {
            assert_eq!(rician_phase_pdf(0.0, phi), 1.0 / TAU);
            assert_eq!(small_angle_phase_pdf(0.0, phi), 1.0 / TAU);
        }
        // limit K -> 0 of the closed form
        assert_relative_eq!(rician_phase_pdf(1e-14, 1.0), 1.0 / TAU, max_relative = 1e-6);
    }

    #[test]
    fn densities_are_even() {
        for k in [0.3, 2.0, 4.0, 50.0] {
            for i in 0..200 {
                let phi = i as f64 * PI / 200.0;
                assert_relative_eq!(
                    rician_phase_pdf(k, phi),
                    rician_phase_pdf(k, -phi),
                    max_relative = 1e-12
                );
                assert_relative_eq!(
                    amplitude_phase_density(k, phi),
                    amplitude_phase_density(k, -phi),
                    max_relative = 1e-12
                );
                assert_relative_eq!(
                    small_angle_phase_pdf(k, phi),
                    small_angle_phase_pdf(k, -phi),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn densities_normalise() {
        for k in [0.0, 0.5, 2.0, 4.0, 10.0, 1e4, 1e9] {
            let total = integrate(|t| rician_phase_pdf(k, t), k);
            assert!((total - 1.0).abs() < 1e-8, "K={k}: {total}");
            let total = integrate(|t| small_angle_phase_pdf(k, t), k);
            assert!((total - 1.0).abs() < 1e-8, "K={k}: {total}");
        }
    }

    #[test]
    fn small_angle_branches_agree() {
        // var = 1 is the switch point; both series are accurate there
        let k = 0.5;
        let var: f64 = 1.0;
        for i in 0..50 {
            let phi = -PI + i as f64 * 0.12;
            let images: f64 = (-6..=6)
                .map(|j| {
                    let t = phi + TAU * j as f64;
                    (-t * t / (2.0 * var)).exp()
                })
                .sum::<f64>()
                / (TAU * var).sqrt();
            assert_relative_eq!(small_angle_phase_pdf(k, phi), images, max_relative = 1e-12);
        }
    }

    #[test]
    fn mean_amplitude_matches_rician_mean() {
        // direct 2-D midpoint integral of |h| over the complex plane
        for k in [0.0f64, 1.0, 4.0] {
            let s = (k / (k + 1.0)).sqrt();
            let var = 1.0 / (k + 1.0);
            let n = 1200;
            let lim = s + 8.0 * var.sqrt();
            let h = 2.0 * lim / n as f64;
            let mut direct = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let x = -lim + (i as f64 + 0.5) * h;
                    let y = -lim + (j as f64 + 0.5) * h;
                    let d = ((x - s).powi(2) + y * y) / var;
                    direct += (x * x + y * y).sqrt() * (-d).exp() / (PI * var) * h * h;
                }
            }
            let via_phase = integrate(|t| amplitude_phase_density(k, t), k);
            assert_relative_eq!(via_phase, direct, max_relative = 1e-6);
        }
    }

    #[test]
    fn moment_full_circle_limits() {
        let z = joint_amplitude_phase_moment(0.0, Arc::full(), false, 4096);
        assert!(z.norm() < 1e-12);
        let z = joint_amplitude_phase_moment(1e12, Arc::full(), false, 4096);
        assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-8, "{z}");
        let z = joint_amplitude_phase_moment(4.0, Arc::new(0.3, 0.3), true, 4096);
        assert_eq!(z, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn nodes_cover_arc() {
        for arc in [Arc::new(-PI, PI), Arc::new(2.5, 4.0), Arc::new(-0.2, 0.01)] {
            for peak in [PI, 0.05] {
                let nodes = arc_nodes(arc, 64, peak);
                let width: f64 = nodes.iter().map(|n| n.w).sum();
                assert_relative_eq!(width, arc.len(), epsilon = 1e-12);
                assert!(nodes.windows(2).all(|w| w[1].t > w[0].t));
            }
        }
    }
}
