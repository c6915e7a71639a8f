use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("unsupported polynomial degree {0}: only linear elements are implemented")]
    UnsupportedDegree(usize),
    #[error("parameter `{name}` = {value} lies outside [{lo}, {hi}]")]
    ParameterOutOfRange {
        name: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular local block in cell {cell} for direction {direction}")]
    SingularCellBlock { cell: usize, direction: usize },
    #[error("affine decomposition does not reproduce the assembled operator (relative error {0:e})")]
    AffineMismatch(f64),
    #[error("problem has no affine decomposition")]
    NonAffine,
    #[error("diffusion operator factorization failed: {0}")]
    DsaFactorization(String),
    #[error("diffusion solve residual {achieved:e} exceeds {tolerance:e}")]
    DsaSolve { achieved: f64, tolerance: f64 },
    #[error("reduced system of dimension {dim} is singular; add training data or tighten the POD tolerance")]
    SingularReducedSystem { dim: usize },
    #[error("snapshot matrix is empty or numerically zero")]
    EmptySnapshots,
    #[error("reduced model does not match the system: {0}")]
    ModelMismatch(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
