//! Experiment runner, file formats and CLI plumbing for `factor-cavity-core`.

pub mod acceptance;
pub mod config;
pub mod graph_io;
pub mod parallel;
pub mod report;
pub mod run;
