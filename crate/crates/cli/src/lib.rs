//! Command-line harness around `reglgcn`: TOML run configurations, training
//! over repeat seeds, grid search, ablation, stationarity verification and
//! embedding export. Reports are JSON.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use config::{RankExpr, RunConfig};
pub use error::{CliError, Result};
pub use report::{RunCheckpoint, RunReport};
