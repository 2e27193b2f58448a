use thiserror::Error;

/// Errors shared by the library modules.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A data line of an edge list did not hold two integer tokens.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// An operation received a node id outside `0..node_count`.
    #[error("node id {id} out of range (node count {node_count})")]
    NodeOutOfRange { id: u32, node_count: u32 },

    /// Similarity is undefined for the pair (zero-norm vector under cosine,
    /// constant vector under pearson/spearman).
    #[error("similarity undefined: {0}")]
    UndefinedSimilarity(String),

    /// An index was asked to build over an empty point set, or queried empty.
    #[error("empty index: {0}")]
    EmptyIndex(String),

    /// A parameter was outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A quality measure is undefined for the given input.
    #[error("undefined measure: {0}")]
    UndefinedMeasure(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
