use thiserror::Error;

/// Errors produced by the alignment, learning and benchmarking routines.
#[derive(Debug, Error)]
pub enum SegalignError {
    #[error("empty sample set")]
    EmptySet,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("segment {begin}..={end} out of bounds for length {len}")]
    SegmentOutOfBounds { begin: usize, end: usize, len: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("segment lengths ({len_x}, {len_y}) outside the length prior support")]
    LengthOutsideSupport { len_x: usize, len_y: usize },
    #[error("segment length must be at least 1")]
    ZeroLength,
    #[error("infeasible alignment: {0}")]
    Infeasible(String),
    #[error("degenerate transition counts: {0}")]
    DegenerateCounts(String),
    #[error("empty feasible region: {0}")]
    EmptyFeasibleRegion(String),
    #[error("zero-mass histogram: {0}")]
    ZeroMass(String),
    #[error("negative count at frame {frame}, bin {bin}")]
    NegativeCount { frame: usize, bin: usize },
    #[error("histogram length mismatch: {0} vs {1}")]
    BinMismatch(usize, usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("all paired differences are zero")]
    NoNonzeroDifferences,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SegalignError {
    /// True for errors that stem from infeasible constraints rather than bad data.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            SegalignError::Infeasible(_) | SegalignError::EmptyFeasibleRegion(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, SegalignError>;
