//! Manifest-driven experiments on top of [`nstorus`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod manifest;
mod output;

pub use error::{CliError, CliResult, ErrorReport};
pub use experiments::{run_experiment, RunOptions, Summary};
pub use manifest::{generate_initial, Experiment, InitialSpec, RunManifest, MANIFEST_VERSION};
