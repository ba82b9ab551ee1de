//! Experiment driver for greedy-policy batch selection: configuration,
//! seeded orchestration of the `subset`, `al`, `verify` and `oracle`
//! commands, and CSV/JSON artifacts.

pub mod al;
pub mod artifacts;
pub mod common;
pub mod config;
pub mod error;
pub mod oracle;
pub mod sample;
pub mod subset;
pub mod verify;

pub use config::{Mode, Overrides, RunConfig, StrategyKind};
pub use error::{CliError, CliResult};
