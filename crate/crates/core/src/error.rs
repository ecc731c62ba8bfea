use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("axis ({x}, {y}, {z}) is not a unit vector (norm {norm})")]
    NonUnitAxis { x: f64, y: f64, z: f64, norm: f64 },

    #[error("Bloch vector has norm {norm} > 1: not a physical state")]
    NonPhysicalBloch { norm: f64 },

    #[error("state is not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("operator is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("meter observable is degenerate: {0}")]
    DegenerateMeter(String),

    #[error("measurement operators are not complete (deviation {deviation:e})")]
    Incomplete { deviation: f64 },

    #[error("duplicate outcome label {0}")]
    DuplicateLabel(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    /// A squared rms quantity came out clearly negative: the operators or
    /// expectation values it was built from are mutually inconsistent.
    #[error("negative radicand {value:e} for {quantity}")]
    NegativeRadicand { quantity: &'static str, value: f64 },

    #[error("no counts recorded")]
    ZeroCounts,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("empty result set")]
    EmptyResults,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
