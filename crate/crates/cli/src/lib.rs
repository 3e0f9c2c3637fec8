//! Command-line front end: configuration, run orchestration and persistence.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
