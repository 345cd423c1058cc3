//! Pipeline driver for media-source profiling: file formats, configuration,
//! cached stages, and reports.

pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod seeds;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use pipeline::{Pipeline, RunSummary, Stage};
