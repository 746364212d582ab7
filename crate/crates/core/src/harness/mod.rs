//! Configuration files, named verification scenarios and CSV output.

mod config;
mod csv;
mod scenario;

pub use self::config::{parse_config, parse_config_str, RunConfig};
pub use self::csv::{emit_csv, format_number};
pub use self::scenario::{run_scenario, Comparison, Criterion, ScenarioReport, SCENARIOS};
