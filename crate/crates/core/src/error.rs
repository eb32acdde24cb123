use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("trace contains no valid session records ({rejected} line(s) rejected)")]
    EmptyTrace { rejected: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("association matrix for user {0} has no activity")]
    NoActivity(String),

    #[error("modularity is undefined on a graph without edges")]
    UndefinedModularity,

    #[error("average path length is undefined: no connected vertex pair")]
    UndefinedPath,

    #[error("config error: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// Wraps an error with the pipeline stage it came from, for `map_err`.
    pub fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Innermost error, looking through stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by configuration rather than data.
    pub fn is_config(&self) -> bool {
        matches!(self.root(), Error::Config(_))
    }
}
