use conical_liouville::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    /// Stable machine-readable tag printed after `error:`.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                CoreError::Precondition(_) => "precondition",
                CoreError::EmptyStencil => "empty_stencil",
                CoreError::NoConvergence { .. } => "no_convergence",
                CoreError::OriginOnBoundary { .. } => "origin_on_boundary",
                CoreError::SubsolutionScreen { .. } => "subsolution_screen",
                CoreError::NotPositive { .. } => "not_positive",
                CoreError::DegenerateSubsolution { .. } => "degenerate_subsolution",
                CoreError::MassAboveThreshold { .. } => "mass_above_threshold",
                CoreError::NotDecaying { .. } => "not_decaying",
                CoreError::Blowup { .. } => "blowup",
                CoreError::OutOfRange { .. } => "out_of_range",
                CoreError::Parse(_) => "parse",
                CoreError::Io(_) => "io",
            },
            CliError::Usage(_) => "usage",
            CliError::Parse(_) => "parse",
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
        }
    }

    /// `error: <kind>: <message>` on one line.
    pub fn line(&self) -> String {
        let msg = self.to_string().replace('\n', " ");
        format!("error: {}: {}", self.kind(), msg.trim())
    }
}

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

pub fn parse_err<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Parse(msg.into()))
}
