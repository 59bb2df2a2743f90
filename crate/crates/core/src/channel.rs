//! Channel model: deterministic LoS source-to-surface link and Rician
//! surface-to-destination link, folded into one cascaded gain per element.
//!
//! For element `i` at position `x_i` the cascaded gain is
//!
//! ```text
//! h_i = sqrt(K/(K+1)) + sqrt(1/(K+1)) * g_i * exp(j 2 pi x_i cos(phi_rd) / lambda)
//! ```
//!
//! with `g_i ~ CN(0, 1)`. The deterministic per-element rotation
//! `(2 pi x_i / lambda)(cos phi_sr + cos phi_rd)` is kept out of `h_i` and
//! handled by [`crate::placement::phase_offset`].

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::placement::ElementLayout;
use crate::{Error, Result};

/// Wraps an angle to the half-open interval `[-pi, pi)`.
pub fn wrap_phase(x: f64) -> f64 {
    if (-PI..PI).contains(&x) {
        return x;
    }
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y >= PI {
        y - TAU
    } else {
        y
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Link-budget and array geometry. Powers are linear watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    /// Source-to-surface distance in meters.
    pub d_sr: f64,
    /// Surface-to-destination distance in meters.
    pub d_rd: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Carrier wavelength in meters.
    pub lambda: f64,
    /// Angle of arrival at the surface, radians.
    pub phi_sr: f64,
    /// Angle of departure from the surface, radians.
    pub phi_rd: f64,
    /// Transmit power, watts.
    pub p_s: f64,
    /// Noise power, watts.
    pub sigma2: f64,
    /// Channel power gain at the 1 m reference distance.
    pub beta0: f64,
}

impl LinkGeometry {
    /// The evaluation setup used throughout the experiments: 30 dBm transmit
    /// power, -110 dBm noise, `d_sr = 30 m`, `d_rd = 10 m`, `alpha = 3`,
    /// `beta0 = 1e-3`, a 0.1 m wavelength and `cos(phi_sr) + cos(phi_rd) = 0.2`.
    pub fn reference() -> Self {
        let half = (0.1f64).acos();
        LinkGeometry {
            d_sr: 30.0,
            d_rd: 10.0,
            alpha: 3.0,
            lambda: 0.1,
            phi_sr: half,
            phi_rd: half,
            p_s: dbm_to_watts(30.0),
            sigma2: dbm_to_watts(-110.0),
            beta0: 1e-3,
        }
    }

    /// Sets both angles so that `cos(phi_sr) = cos(phi_rd) = cos_sum / 2`.
    pub fn with_cos_sum(mut self, cos_sum: f64) -> Result<Self> {
        if !cos_sum.is_finite() || cos_sum.abs() > 2.0 {
            return Err(Error::invalid(
                "cos_sum",
                format!("{cos_sum} is outside [-2, 2]"),
            ));
        }
        let phi = (cos_sum / 2.0).acos();
        self.phi_sr = phi;
        self.phi_rd = phi;
        Ok(self)
    }

    pub fn with_d_rd(mut self, d_rd: f64) -> Self {
        self.d_rd = d_rd;
        self
    }

    pub fn cos_sum(&self) -> f64 {
        self.phi_sr.cos() + self.phi_rd.cos()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_sr", self.d_sr),
            ("d_rd", self.d_rd),
            ("alpha", self.alpha),
            ("lambda", self.lambda),
            ("P_s", self.p_s),
            ("sigma2", self.sigma2),
            ("beta0", self.beta0),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        for (name, v) in [("phi_sr", self.phi_sr), ("phi_rd", self.phi_rd)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "angle must be finite"));
            }
        }
        Ok(())
    }
}

/// Rician factor and element count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicianSpec {
    pub k: f64,
    pub n: usize,
}

impl RicianSpec {
    pub fn new(k: f64, n: usize) -> Result<Self> {
        if !(k >= 0.0) || k.is_nan() {
            return Err(Error::invalid(
                "K",
                format!("Rician factor must be >= 0, got {k}"),
            ));
        }
        if n < 2 {
            return Err(Error::invalid(
                "N",
                format!("need at least 2 elements, got {n}"),
            ));
        }
        Ok(RicianSpec { k, n })
    }
}

/// One realization of the `N` cascaded gains and their wrapped phases.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    pub gains: Vec<Complex64>,
    pub phases: Vec<f64>,
}

impl ChannelDraw {
    pub fn from_gains(gains: Vec<Complex64>) -> Self {
        let phases = gains.iter().map(|h| wrap_phase(h.arg())).collect();
        ChannelDraw { gains, phases }
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

/// The random stream for Monte Carlo trial `trial` under master seed `seed`.
///
/// ChaCha streams are independent per stream id, so trial `t` sees the same
/// numbers whatever order or thread the trials run on.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// One draw of `CN(0, 1)`: independent real and imaginary parts, each with
/// variance 1/2.
pub fn sample_nlos<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Cascaded gain of an element at position `x` given its NLoS sample.
pub fn cascaded_gain(k: f64, nlos: Complex64, x: f64, geometry: &LinkGeometry) -> Complex64 {
    let los = (k / (k + 1.0)).sqrt();
    let scatter = (1.0 / (k + 1.0)).sqrt();
    let rotation = Complex64::from_polar(1.0, TAU * x / geometry.lambda * geometry.phi_rd.cos());
    Complex64::new(los, 0.0) + nlos * rotation * scatter
}

/// `P_s beta0^2 / (d_sr^alpha d_rd^alpha sigma^2)`.
pub fn snr_prefactor(geometry: &LinkGeometry) -> f64 {
    geometry.p_s * geometry.beta0 * geometry.beta0
        / (geometry.d_sr.powf(geometry.alpha)
            * geometry.d_rd.powf(geometry.alpha)
            * geometry.sigma2)
}

pub fn draw_channel<R: Rng + ?Sized>(
    spec: &RicianSpec,
    layout: &ElementLayout,
    geometry: &LinkGeometry,
    rng: &mut R,
) -> Result<ChannelDraw> {
    if layout.len() != spec.n {
        return Err(Error::LengthMismatch {
            what: "element layout",
            expected: spec.n,
            actual: layout.len(),
        });
    }
    let gains = layout
        .positions()
        .iter()
        .map(|&x| cascaded_gain(spec.k, sample_nlos(rng), x, geometry))
        .collect();
    Ok(ChannelDraw::from_gains(gains))
}
