//! Batch front end: JSON run configs, check execution, reports, CSV series
//! and a run manifest.

pub mod checks;
pub mod config;
pub mod error;
pub mod run;

pub use config::{CheckSpec, FieldSpec, Identity, RunConfig, UserChart};
pub use error::CliError;
pub use run::{config_hash, resolve_output_dir, run, CheckStatus, RunManifest, OUTPUT_DIR_ENV};
