use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("{path}: row {row} has {found} fields, expected {expected}")]
    MalformedRow {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}: row {row}, column `{column}`: `{value}` is not a finite number")]
    NonNumericValue {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },
    #[error("{path}: row {row}: duplicate song id `{id}`")]
    DuplicateSongId { path: PathBuf, row: usize, id: String },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{0}: no data rows")]
    EmptyTable(PathBuf),
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON document: {message}")]
    Json { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    /// The experiment ran to completion but some cells failed; the report
    /// has the details.
    #[error("one or more experiment cells failed; see {0}")]
    CellsFailed(PathBuf),
    #[error(transparent)]
    Core(#[from] tripletreg_core::Error),
}

impl Error {
    /// Short variant name used in reports, e.g. `FAILED(InfeasibleAnchor)`.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::MissingFile(_) => "MissingFile",
            Error::MalformedRow { .. } => "MalformedRow",
            Error::NonNumericValue { .. } => "NonNumericValue",
            Error::DuplicateSongId { .. } => "DuplicateSongId",
            Error::MissingColumn { .. } => "MissingColumn",
            Error::EmptyTable(_) => "EmptyTable",
            Error::Csv { .. } => "Csv",
            Error::Io { .. } => "Io",
            Error::Json { .. } => "Json",
            Error::Config(_) => "Config",
            Error::CellsFailed(_) => "CellsFailed",
            Error::Core(e) => e.tag(),
        }
    }

    /// Process exit code: 1 for bad input or configuration, 2 for failures
    /// while running (divergence, write errors).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::CellsFailed(_) => 2,
            Error::Core(e) if !e.is_input_error() => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }
}
