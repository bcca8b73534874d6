//! Statistical validation of raw samples and extracted output.

pub mod bitmap;
pub mod correlation;
pub mod stats;
pub mod sts;

pub use bitmap::{bitmap, xor_bitmap, BitmapImage, PbmFormat};
pub use correlation::{
    cross_correlation, mi_bias, mi_threshold, mutual_information, rho_threshold, CorrelationReport, LagSeries,
};
pub use stats::{code_histogram, empirical_min_entropy, ByteUniformity, Histogram};
pub use sts::{nist_subset, proportion_interval, TestReport, TestResult};
