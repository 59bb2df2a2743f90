//! Discrete phase-shift codebook design and link-level simulation for
//! intelligent reflecting surfaces whose elements can be repositioned.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: LoS source link, Rician element-to-destination link and the
//!   per-element cascaded gains.
//! - [`placement`]: element positions that cancel the cross-element phase
//!   distribution offset, plus the fixed quarter-wavelength layout.
//! - [`codebook`]: phase densities, the circular Lloyd-type codebook design and
//!   the runtime shift-selection rule.
//! - [`rate`]: receive SNR, Monte Carlo average rate and the Jensen bound.
//! - [`harness`]: experiment sweeps, CSV output and config files used by the
//!   `irs-dps` binary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod codebook;
mod error;
pub mod exec;
pub mod harness;
pub mod placement;
pub mod rate;

pub use channel::{ChannelDraw, LinkGeometry, RicianSpec};
pub use codebook::{DesignConfig, PhaseCodebook, Start, Weighting};
pub use error::{Error, Result};
pub use exec::Execution;
pub use placement::ElementLayout;
pub use rate::{RateEstimate, SchemeKind};
