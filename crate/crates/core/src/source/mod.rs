//! Simulated sideband front end and its raw-sample file format.

pub mod filter;
pub mod prng;
pub mod rawfile;
pub mod sim;

pub use filter::{FilterSpec, FirFilter, WindowKind};
pub use prng::{PrngKind, StreamRng};
pub use sim::{
    downconvert, quantize, simulate_channel, synth_wideband, ChannelSpec, Downconverter, Quantizer,
    RawSampleBlock, WidebandSamples, WidebandSource, INTERNAL_RATE_FACTOR, REFERENCE_LPF_CUTOFF_HZ,
    REFERENCE_SAMPLE_RATE_HZ,
};
