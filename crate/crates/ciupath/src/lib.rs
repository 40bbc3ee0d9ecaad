//! File formats, IO and the command-line front end for `ciupath-core`.

pub mod builtin;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod embeddings;
pub mod error;
pub mod features;
pub mod report;

pub use error::{CheckpointError, Error, Result};
