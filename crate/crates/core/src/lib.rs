//! Fingerprint template protection built on minutia-pair spectral representations.
//!
//! The crate turns a variable-size minutia set into a fixed-length complex-valued
//! representation on a `(q, R)` grid, quantizes it with a zero-leakage helper-data
//! scheme, and protects the resulting bit string with a polar-code secure sketch
//! (code-offset method). A synthetic-data generator and an ROC/EER harness allow
//! end-to-end evaluation without access to licensed fingerprint databases.
//!
//! Pipeline overview:
//!
//! ```text
//! minutiae --> spectral maps --> normalize --> stage 1 (zero-leakage quantizer)
//!          --> reliable-component selection --> stage 2 (syndrome sketch + hash)
//! ```
//!
//! All randomized operations take explicit seeds and are deterministic given them.
//! With the default `parallel` feature, grid sweeps and Monte-Carlo loops run on
//! rayon; results are identical to the sequential fallback.

pub mod com;
pub mod error;
pub mod eval;
pub mod minutiae;
pub mod pipeline;
pub mod polar;
pub mod spectral;
pub mod zlhds;

pub use error::{Error, Result};
