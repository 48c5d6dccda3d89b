//! Batch runner for the `fieldquant` laboratory: scenario files in, CSV reports out.

pub mod commands;
pub mod config;
pub mod output;
pub mod suites;
