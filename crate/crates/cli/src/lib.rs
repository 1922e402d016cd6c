//! Command-line front end for the `iontrap-cf` solver: configuration
//! layering, command dispatch, and CSV/JSON output.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, RunConfig};
pub use run::{main_with, run};
