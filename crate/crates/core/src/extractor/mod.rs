//! Toeplitz-hashing randomness extraction.

pub mod kernel;
pub mod seed;
pub mod stream;
pub mod toeplitz;

pub use kernel::{multiply, ChunkWidth, Kernel, ToeplitzKernel, Word};
pub use seed::{seeded_spec_from_config, SeedRecord, SeedSource};
pub use stream::{ExtractorCounters, ExtractorState, FinishReport};
pub use toeplitz::{build_toeplitz, multiply_naive, ToeplitzSpec};
