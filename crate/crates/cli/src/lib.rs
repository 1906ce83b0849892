//! Data ingestion, configuration and run orchestration around the `mtggm`
//! solver. The `mtggm` binary is a thin wrapper over [`run`].

pub mod config;
pub mod error;
pub mod manifest;
pub mod matrix_csv;
pub mod run;

pub use error::{ErrorRecord, HarnessError, Result};
pub use manifest::RunManifest;
pub use matrix_csv::{load_matrix_csv, MatrixFile, MatrixRole};
pub use run::{run_eval, run_fit, run_sweep, run_synth_experiment, write_results};

/// Directory holding the JSON schemas of the emitted artifacts.
pub const SCHEMA_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/schema");
