//! Experiment driver for the EPR simulator: configuration, the
//! synthesize → detect → analyze pipeline, and the CLI verbs.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;

pub use config::RunConfig;
pub use error::{CliError, Result};
