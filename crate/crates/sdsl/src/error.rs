use std::path::PathBuf;

use sdsl_core::Error as CoreError;

/// Failures of a command, each mapped onto the documented exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A numerical failure, tagged with the pipeline stage it came from.
    #[error("{source}")]
    Core { module: &'static str, source: CoreError },
    /// The configuration failed schema or range validation.
    #[error("{0}")]
    Config(String),
    /// A data file could not be parsed or does not match the band.
    #[error("{}: {detail}", path.display())]
    Format { path: PathBuf, detail: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn core(module: &'static str) -> impl FnOnce(CoreError) -> CliError {
        move |source| CliError::Core { module, source }
    }

    /// 2 invalid input, 3 integrator failure, 4 non-convergence; I/O
    /// failures share the invalid-input code.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core { source, .. } if source.is_integrator_failure() => 3,
            CliError::Core { source: CoreError::NonConvergent { .. }, .. } => 4,
            CliError::Core { source: CoreError::ModeFailed { source, .. }, .. }
                if matches!(**source, CoreError::NonConvergent { .. }) =>
            {
                4
            }
            _ => 2,
        }
    }

    /// The module tag printed on stderr.
    pub fn module(&self) -> &'static str {
        match self {
            CliError::Core { module, .. } => module,
            CliError::Config(_) => "config",
            CliError::Format { .. } | CliError::Io { .. } => "io",
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
