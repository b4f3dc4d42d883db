//! Command-line front end for the tempus laboratory: configuration files,
//! manifests, CSV/JSON output, parallel drivers and the acceptance suite.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod parallel;
pub mod suite;
