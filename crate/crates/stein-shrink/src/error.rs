use thiserror::Error;

/// Errors shared by the numerical layers of the crate.
///
/// Text-format parsing has its own error types in [`crate::matrix_io`] and
/// [`crate::report`]; everything matrix- or model-shaped funnels through here.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix entry ({row},{col}) is not finite")]
    NotFinite { row: usize, col: usize },

    #[error(
        "matrix is not symmetric: worst pair ({row},{col}) has {lower} below vs {upper} above \
         the diagonal"
    )]
    NotSymmetric {
        row: usize,
        col: usize,
        lower: f64,
        upper: f64,
    },

    #[error("numerical rank mismatch: expected {expected}, observed {observed}")]
    RankMismatch { expected: usize, observed: usize },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue} below tolerance")]
    NotPositiveSemiDefinite { eigenvalue: f64 },

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter {what} = {value}: {reason}")]
    InvalidParameter {
        what: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("eigenvalue {index} is {value}, but a strictly positive spectrum is required")]
    NonPositiveEigenvalue { index: usize, value: f64 },

    #[error("eigenvalues {index} and {next} are tied; the difference quotient is undefined", next = index + 1)]
    TiedEigenvalues { index: usize },

    #[error(
        "degenerate configuration: only {positive} positive eigenvalues above tolerance \
         where {required} are required"
    )]
    DegenerateConfiguration { positive: usize, required: usize },

    #[error("reference risk {value} is not strictly positive; PRIAL is undefined")]
    NonPositiveReferenceRisk { value: f64 },

    #[error("paired samples disagree at replication {replication}: datasets were not shared")]
    UnpairedSamples { replication: usize },

    #[error("duplicate report row for the same (structure, p, n, r, alpha) key at index {index}")]
    DuplicateRow { index: usize },

    #[error("replication {index} failed: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
