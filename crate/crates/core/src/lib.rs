//! Synthetic pulsatile LH series and multi-scale pulse detection.
//!
//! * [`model`] generates plasma LH from a spike-release/clearance model and
//!   samples it with a noisy protocol.
//! * [`detect`] finds pulses in a sampled series.
//! * [`tunnel`] turns pulses into interpulse intervals, fits their cubic
//!   trend and flags intervals falling outside the tolerance tunnel.
//! * [`io`], [`document`] and [`plot`] handle CSV input, the JSON result
//!   document and SVG output.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod detect;
pub mod document;
pub mod error;
pub mod io;
pub mod model;
pub mod plot;
pub mod series;
pub mod tunnel;

pub use analysis::{analyze, DetectionResult};
pub use detect::{detect, DetectionParams, PulseVector};
pub use document::{DetectionResultDocument, Provenance};
pub use error::{Error, Result};
pub use model::{GeneratorConfig, SamplingConfig, Scenario};
pub use series::TimeSeries;
