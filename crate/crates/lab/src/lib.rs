//! Experiment front end for `oqm-core`: configuration, artifact persistence
//! with a hashed manifest, and the `oqm` command line.

pub mod artifact;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use config::ExperimentConfig;
pub use error::LabError;
