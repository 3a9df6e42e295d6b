//! Link-level simulator for photon-counting free-space optical links.
//!
//! The crate models on-off keyed transmission over a Gamma-Gamma turbulence
//! channel with pointing errors and unknown background radiation, and
//! implements six detectors for it: the genie-aided ideal receiver, the
//! integral MLSD receiver, the GMLSD sequence receiver (block or trellis
//! engine), the GLRT sequence receiver and the two decision-feedback
//! receivers. [`harness`] runs Monte-Carlo sweeps over them and [`analysis`]
//! provides the matching closed-form and quadrature error probabilities.

pub mod analysis;
pub mod channel;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod receivers;
pub mod signal;
pub mod validate;

pub use error::{Error, Result};
