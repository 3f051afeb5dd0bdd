use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("ambient dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("grade mismatch: {0} vs {1}")]
    GradeMismatch(usize, usize),
    #[error("grade overflow: {k} + {l} > {n}")]
    GradeOverflow { k: usize, l: usize, n: usize },
    #[error("grade underflow")]
    GradeUnderflow,
    #[error("invalid index tuple {0:?} for dimension {1}")]
    InvalidIndex(Vec<usize>, usize),
    #[error("unsupported field order")]
    UnsupportedFieldOrder,
    #[error("jet chain of order {0} not supported by this operation")]
    OrderTooHigh(usize),
    #[error("test form supplies derivatives up to order {have}, need {need}")]
    InsufficientFormOrder { have: usize, need: usize },
    #[error("test form has no certified bound at order {0}")]
    UncertifiedForm(usize),
    #[error("loops intersect near {0:?}")]
    LoopsIntersect([f64; 3]),
    #[error("invalid loop: {0}")]
    InvalidLoop(String),
    #[error("invalid face: {0}")]
    InvalidFace(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
