//! Configuration, commands and file handling behind the command-line tool.

pub mod analyze;
pub mod bench;
pub mod config;
pub mod io;
pub mod plan;
pub mod run;

pub use analyze::{analyze, load_inputs, AnalysisReport, AnalyzeOptions, Input};
pub use bench::{cmd_bench, BenchReport};
pub use config::{OutputFormat, ResolvedChannel, RunConfig, Scale, Seed64, SAMPLE_CONFIG};
pub use io::{deinterleave, interleave, read_bits, write_bits};
pub use plan::{cmd_plan, PlanReport};
pub use run::{cmd_run, execute, RunManifest, RunOptions, RunOutcome, SeedOrigin};
