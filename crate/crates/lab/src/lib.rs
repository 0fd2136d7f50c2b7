//! File formats, configuration and multi-run harness around `prm-core`.

pub mod cli;
pub mod config;
pub mod env_format;
pub mod error;
pub mod harness;
pub mod rm_format;

pub use error::{LabError, Result};
