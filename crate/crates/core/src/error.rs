use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("shape mismatch: parameters have {params} entries, gradients have {grads}")]
    ShapeMismatch { params: usize, grads: usize },
    #[error("column mismatch between training and target feature tables")]
    ColumnMismatch,
    #[error("label range is degenerate for {0}: all values identical")]
    DegenerateRange(&'static str),
    #[error("target has zero variance")]
    DegenerateTarget,
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("invalid fold count k={k} for n={n} samples")]
    InvalidK { n: usize, k: usize },
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no anchor with both a positive and a negative candidate after {attempts} attempts")]
    InfeasibleAnchor { attempts: usize },
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("reducer has not been fitted")]
    NotFitted,
    #[error("non-finite value at row {row}, column {column}")]
    NonFiniteValue { row: usize, column: usize },
}

impl Error {
    /// Short stable identifier, used when a failure is surfaced in reports.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::ColumnMismatch => "ColumnMismatch",
            Error::DegenerateRange(_) => "DegenerateRange",
            Error::DegenerateTarget => "DegenerateTarget",
            Error::DegenerateData(_) => "DegenerateData",
            Error::InvalidK { .. } => "InvalidK",
            Error::InvalidDims(_) => "InvalidDims",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InfeasibleAnchor { .. } => "InfeasibleAnchor",
            Error::NonFiniteLoss { .. } => "NonFiniteLoss",
            Error::NotFitted => "NotFitted",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
        }
    }

    /// Whether the error stems from the caller's input rather than from a
    /// computation going wrong.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::NonFiniteLoss { .. })
    }
}
