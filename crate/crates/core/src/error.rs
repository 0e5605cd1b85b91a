use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { defect: f64, tolerance: f64 },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigenvalue crossing between s = {start} and s = {end} (levels {levels:?}, gap {gap:.3e})")]
    Crossing {
        start: f64,
        end: f64,
        levels: (usize, usize),
        gap: f64,
    },

    #[error("discontinuous eigenprojector between s = {start} and s = {end} (level {level}, overlap {overlap:.4})")]
    Discontinuous {
        start: f64,
        end: f64,
        level: usize,
        overlap: f64,
    },

    #[error("eigenvalue gap {gap:.3e} at s = {s} is below the floor {floor:.3e}")]
    GapBelowFloor { s: f64, gap: f64, floor: f64 },

    #[error("step cap of {cap} steps exceeded")]
    StepCap { cap: usize },

    #[error("local error tolerance {tolerance:.3e} unreachable (step size fell to {step:.3e})")]
    ToleranceUnreachable { tolerance: f64, step: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-positive value {value:.3e} at sample {index}; log-log slope undefined")]
    NonPositiveSample { index: usize, value: f64 },

    #[error("insufficient samples: need at least {needed}, got {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("unitary path is not smooth enough: anti-Hermitian generator residual {residual:.3e}")]
    NonSmoothUnitary { residual: f64 },

    #[error("level index {index} out of range for dimension {dim}")]
    LevelOutOfRange { index: usize, dim: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
