//! File formats, pipeline runner and HTTP API around [`cartopipe_core`].

pub mod files;
pub mod inject;
pub mod pipeline;
pub mod serve;

pub use cartopipe_core as core;
pub use inject::{inject_xml, InjectError};
pub use pipeline::{run_pipeline, RunOptions, RunReport};
