use std::path::PathBuf;

use crate::grid::GlimpseIndex;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("data error: {0}")]
    Data(String),

    /// No candidate survives at `step` (exclusions, restrictions or unreachable nodes).
    #[error("infeasible search problem: no reachable candidate at time step {step}")]
    Infeasible { step: usize },

    #[error("missing score for glimpse {0:?}")]
    MissingScore(GlimpseIndex),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable tag used by the command line front end.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Parse { .. } => "parse",
            Error::Data(_) => "data",
            Error::Infeasible { .. } => "infeasible",
            Error::MissingScore(_) => "missing-score",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Image(_) => "image",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
