//! Configuration-driven runs of the analytic and MPS engines, writing
//! plot-ready CSV and a JSON-lines stream of comparison reports.

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod run;

use std::path::Path;

pub use config::{parse_config, RunConfig};
pub use error::{CliError, CliResult};
pub use presets::{preset, PRESETS};

/// Exit status of a completed run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    /// Outputs were written but some comparison failed.
    ValidationFailed,
}

/// Runs `config` and writes its outputs into `out`, or into the configured
/// directory.
pub fn run(config: &RunConfig, out: Option<&Path>) -> CliResult<Outcome> {
    let runs = run::execute(config)?;
    let rendered = output::render(config, &runs)?;
    let dir = out.unwrap_or(&config.output.dir);
    output::write_all(dir, &rendered)?;
    Ok(if rendered.failed_reports > 0 { Outcome::ValidationFailed } else { Outcome::Passed })
}
