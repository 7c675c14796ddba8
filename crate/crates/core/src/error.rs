use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("element {element}: non-positive Jacobian {det:e} at quadrature point {point}")]
    DegenerateElement { element: usize, point: usize, det: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular or indefinite matrix: zero pivot at row {0}")]
    Singular(usize),
    #[error("Newton did not converge in {iters} iterations (residual {residual:e})")]
    NewtonDivergence { iters: usize, residual: f64 },
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("missing coefficient: {0}")]
    MissingCoefficient(String),
    #[error("2:1 internal resonance with mode {mode}: |ws^2 - 4wp^2| / ws^2 = {gap:e}")]
    InternalResonance { mode: usize, gap: f64 },
    #[error("continuation failed: {0}")]
    Continuation(String),
    #[error("empty validity range: {0}")]
    EmptyValidityRange(String),
    #[error("lapack: {0}")]
    Lapack(#[from] ndarray_linalg::error::LinalgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
