use std::path::PathBuf;

/// Everything a command can fail with, mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] skillnet::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Some folds diverged; their reports were still written.
    #[error("{0} fold(s) failed to train")]
    FoldsFailed(usize),
}

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_DIVERGENCE: u8 = 3;
pub const EXIT_IO: u8 = 4;
pub const EXIT_INTERNAL: u8 = 1;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use skillnet::Error as E;
        match self {
            CliError::Config(_) => EXIT_INPUT,
            CliError::Io { .. } => EXIT_IO,
            CliError::FoldsFailed(_) => EXIT_DIVERGENCE,
            CliError::Core(e) => match e {
                E::Config { .. } | E::Input(_) | E::Parse { .. } => EXIT_INPUT,
                E::Divergence { .. } => EXIT_DIVERGENCE,
                E::Io { .. } => EXIT_IO,
                E::InternalState(_) => EXIT_INTERNAL,
            },
        }
    }
}

pub fn io_error(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
