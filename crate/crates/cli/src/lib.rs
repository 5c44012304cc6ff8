//! Command-line runner: configuration, the end-to-end pipeline, saved
//! model files and the subcommand implementations.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod pipeline;

pub use bundle::{ModelBundle, Prediction};
pub use config::{Overrides, RunConfig};
pub use pipeline::{run, verify, RunSummary};

use fakenews_core::{Error, ErrorClass};

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err.class() {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numeric => 4,
        ErrorClass::Io => 5,
    }
}
