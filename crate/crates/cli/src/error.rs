use asrel::core_builder::CoreError;
use asrel::experiments::ExperimentError;
use asrel::pipeline::PipelineError;
use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input, or nothing to work on. Exit 1.
    #[error("{0}")]
    Input(String),
    /// Invalid flags or parameter values. Exit 2.
    #[error("{0}")]
    Config(String),
    /// Empty core or infeasible core operation. Exit 3.
    #[error("{0}")]
    Core(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Config(_) => 2,
            CliError::Core(_) => 3,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::EmptyCore | CoreError::Infeasible(_) => CliError::Core(e.to_string()),
            CoreError::Parameter(_) => CliError::Config(e.to_string()),
            CoreError::Parse { .. } | CoreError::Io(_) => CliError::Input(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Engine(_) | PipelineError::Heuristic(_) => CliError::Config(e.to_string()),
            PipelineError::NoPaths => CliError::Input(e.to_string()),
            PipelineError::EmptyCore => CliError::Core(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Core(c) => c.into(),
            ExperimentError::Pipeline(p) => p.into(),
            ExperimentError::Fraction(_) => CliError::Config(e.to_string()),
        }
    }
}
