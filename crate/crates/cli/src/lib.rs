//! Command-line frontend: flag parsing, run manifests, file formats and the
//! command implementations behind the `asrel` binary.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;

use args::{Cli, Command};
use error::CliError;
use manifest::Task;

/// Runs a parsed command line; the returned line, if any, goes to stdout.
pub fn run(cli: Cli) -> Result<Option<String>, CliError> {
    match cli.command {
        Command::Infer(a) => {
            let m = a.run.manifest(Task::Infer, vec![])?;
            commands::run_manifest(&m)?;
            Ok(None)
        }
        Command::Experiment(a) => {
            let m = a.manifest()?;
            commands::run_manifest(&m)?;
            Ok(None)
        }
        Command::BuildCore(a) => {
            let spec = a
                .core
                .spec()?
                .ok_or_else(|| CliError::Config("--core-method is required".into()))?;
            let files = manifest::PathFiles {
                bgp: a.inputs.paths_bgp.clone(),
                trace: a.inputs.paths_trace.clone(),
            };
            commands::cmd_build_core(&files, a.inputs.siblings.as_deref(), &spec, &a.out).map(Some)
        }
        Command::Generate(a) => commands::cmd_generate(&a.config(), &a.out, a.bgp).map(Some),
    }
}
