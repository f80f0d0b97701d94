//! Configuration and stage wiring for the `chemvec` command-line tool.

pub mod config;
pub mod error;
pub mod pipeline;

pub use config::{stage_seed, validate_config, RunConfig};
pub use error::{CliError, CliResult, FieldError};
pub use pipeline::{run_pipeline, run_stage, RunManifest, Stage, StageReport};
