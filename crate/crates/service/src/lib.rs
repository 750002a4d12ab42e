//! Command-line and HTTP front ends over the `csplens` pipeline.

pub mod cli;
pub mod service;
pub mod workflow;
