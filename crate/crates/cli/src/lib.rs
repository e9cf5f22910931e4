//! Pipeline runner for the crisis news sympathy toolkit.
//!
//! A TOML config drives twelve stages, from ingesting raw tweet captures to
//! the Markdown and CSV report. Each stage writes into its own directory
//! under the output root along with a record of what it read and wrote;
//! see [`pipeline::Pipeline`].

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod synthetic;

pub use config::{Overrides, PipelineConfig};
pub use error::{PipelineError, Result};
pub use manifest::Stage;
pub use pipeline::Pipeline;
