//! Software model of a parallel multi-sideband vacuum-noise QRNG.
//!
//! Three independent sideband channels are simulated from wideband Gaussian
//! noise, downconverted and quantized, budgeted for conditional min-entropy,
//! compressed with Toeplitz hashing, and checked for randomness and mutual
//! independence.

pub mod analysis;
pub mod bits;
pub mod entropy;
pub mod error;
pub mod extractor;
pub mod pipeline;
pub mod source;

pub use bits::BitStream;
pub use error::{Error, Result};
