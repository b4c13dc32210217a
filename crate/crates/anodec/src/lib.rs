//! File formats, configuration, parallel execution and the staged pipeline
//! around `anodec-core`.

pub mod config;
pub mod error;
pub mod exec;
pub mod seeds;

pub use error::{PipelineError, Result};
pub mod formats;
pub mod pipeline;
pub mod report;
