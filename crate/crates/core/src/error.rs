use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A matrix or vector had the wrong shape.
    Shape(String),
    NonFinite { row: usize, col: usize },
    DuplicateRowId(usize),
    InvalidParameter(String),
    TooManyClusters { k: usize, distinct: usize },
    ZeroWeights,
    LabelOutOfRange { index: usize, label: usize, k: usize },
    EmptyCluster(usize),
    NotSymmetric,
    NotPositiveDefinite { eigenvalue: f64 },
    InvalidProbabilityVector(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Error::NonFinite { row, col } => {
                write!(f, "non-finite value at row {row}, column {col}")
            }
            Error::DuplicateRowId(id) => write!(f, "row id {id} is duplicated or out of range"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::TooManyClusters { k, distinct } => write!(
                f,
                "cannot form {k} clusters from {distinct} distinct weighted rows"
            ),
            Error::ZeroWeights => f.write_str("observation weights sum to zero"),
            Error::LabelOutOfRange { index, label, k } => {
                write!(f, "label {label} at position {index} is outside 0..{k}")
            }
            Error::EmptyCluster(j) => write!(f, "cluster {j} has no members"),
            Error::NotSymmetric => f.write_str("covariance matrix is not symmetric"),
            Error::NotPositiveDefinite { eigenvalue } => write!(
                f,
                "covariance matrix is not positive definite (eigenvalue {eigenvalue:e})"
            ),
            Error::InvalidProbabilityVector(msg) => write!(f, "invalid probability vector: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
