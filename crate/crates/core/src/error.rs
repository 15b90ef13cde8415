use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{line}: {message}")]
    Ingest {
        file: &'static str,
        line: usize,
        message: String,
    },

    #[error("check-in on line {line} references unknown {kind} `{id}`")]
    Dangling {
        line: usize,
        kind: &'static str,
        id: String,
    },

    #[error("unknown demographic attribute `{0}`")]
    UnknownAttribute(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("a custom mindset needs at least one POI")]
    EmptyPoiSet,

    #[error("combining mindsets needs at least two inputs, got {0}")]
    TooFewMindsets(usize),

    #[error("{count} transactions exceed the mining cap of {cap}; try a smaller radius")]
    TooManyTransactions { count: usize, cap: usize },

    #[error("unknown POI `{0}`")]
    UnknownPoi(String),

    #[error("POI `{0}` was not displayed in the latest recommendation")]
    NotDisplayed(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("snapshot error: {0}")]
    Snapshot(String),
}
