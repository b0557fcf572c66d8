use std::path::PathBuf;

/// What went wrong, and which exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] openh_core::Error),
    #[error("{0}")]
    Usage(String),
    /// Checks ran and found problems; details were already reported.
    #[error("{0}")]
    Failed(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn code(&self) -> String {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Usage(_) => "cli::usage".into(),
            CliError::Failed(_) => "cli::failed".into(),
            CliError::Io { .. } => "cli::io".into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_io() => 2,
            CliError::Io { .. } | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

macro_rules! core_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        })*
    };
}

core_from!(
    openh_core::schema::SchemaError,
    openh_core::kinematics::KinematicsError,
    openh_core::normstats::NormError,
    openh_core::mixture::MixtureError,
    openh_core::eval::EvalError,
    openh_core::store::StoreError
);
