use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    Parse { row: usize, column: String, value: String },

    #[error("column not found: {0}")]
    MissingColumn(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("instance {0} has more than one prior assignment")]
    DuplicateAssignment(usize),

    #[error("cluster {0} has zero mass")]
    EmptyCluster(usize),

    #[error("covariance matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("covariance matrix is not positive definite after adding ridge {lambda:e}")]
    NotPositiveDefinite { lambda: f64 },

    #[error("membership u[{row}][{cluster}] is below its prior")]
    BelowPrior { row: usize, cluster: usize },

    #[error("no reliable negatives extracted (epsilon = {epsilon})")]
    EmptyReliableNegatives { epsilon: f64 },

    #[error("spy threshold {threshold} selects no reliable negatives")]
    EmptySpyNegatives { threshold: f64 },

    #[error("reliable negative set pruned to empty at iteration {iteration}")]
    PrunedToEmpty { iteration: usize },

    #[error("training data must contain both classes")]
    SingleClass,

    #[error("unknown {kind}: `{name}`")]
    Unknown { kind: &'static str, name: String },
}

impl Error {
    /// True for failures of a learning algorithm on otherwise valid input.
    pub fn is_algorithmic(&self) -> bool {
        matches!(
            self,
            Error::EmptyCluster(_)
                | Error::NotPositiveDefinite { .. }
                | Error::EmptyReliableNegatives { .. }
                | Error::EmptySpyNegatives { .. }
                | Error::PrunedToEmpty { .. }
                | Error::SingleClass
        )
    }
}
