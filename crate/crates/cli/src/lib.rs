//! Scenario runner for contact-stokes: TOML configs in, CSV/JSON/gnuplot artifacts out.

pub mod config;
pub mod output;
pub mod run;

pub use config::ScenarioConfig;
pub use run::{run, Command, RunOptions};
