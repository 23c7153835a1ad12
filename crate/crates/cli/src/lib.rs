//! Scenario parsing and subcommand orchestration for the `qlink` binary.

pub mod commands;
pub mod error;
pub mod scenario;

use std::path::Path;

pub use commands::{format_security, run, security_report, Command, Output, SecurityReport};
pub use error::{ConfigError, RunError};
pub use scenario::{manifest, parse_scenario, parse_scenario_str, Scenario};

/// Name of the resolved scenario written next to the outputs.
pub const MANIFEST_NAME: &str = "manifest.scenario";

/// Writes the outputs and the manifest into `dir`, one file at a time in
/// a fixed order.
pub fn write_outputs(dir: &Path, command: Command, scenario: &Scenario, output: &Output) -> Result<(), RunError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    for (name, bytes) in &output.files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(io(&path))?;
    }
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, manifest(scenario, command.name())).map_err(io(&path))
}
