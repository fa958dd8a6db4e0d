//! Command line front end and scenario runner for `rhfill-core`.
//!
//! Scenarios are JSON files naming a pair, optional fillings, a representation
//! family and a list of tasks. Each task reports a verdict per named property,
//! structured data, and tables that can be written as CSV.

pub mod cli;
pub mod error;
pub mod formats;
pub mod report;
pub mod scenario;

pub use error::{CliError, CliResult};
pub use report::{emit_plot_data, Report, Table, Verdict};
pub use scenario::{load_scenario, parse_scenario, run_file, run_scenario, Scenario};
