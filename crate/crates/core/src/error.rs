use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Record {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid rule file: {0}")]
    Rules(String),

    #[error("sentence {sent_id}: span {start}..{end} out of bounds (length {len})")]
    SpanBounds {
        sent_id: String,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("invalid mixture spec: {0}")]
    Mixture(String),

    #[error("mixture component {0:?} is empty")]
    EmptyComponent(String),

    #[error("spans reference unknown sentences: {}", .0.join(", "))]
    DanglingSentences(Vec<String>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            already @ Error::Stage { .. } => already,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
