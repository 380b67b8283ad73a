//! File formats, experiment recipes and the command-line front end for
//! [`multsl_core`].

pub mod bin_io;
pub mod capture;
pub mod checkpoint;
pub mod config;
pub mod dataset_io;
pub mod error;
pub mod experiment;
pub mod plot;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
