use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("constraint gradients are not regular: Gram condition number {condition:.3e}")]
    SingularGram { condition: f64 },

    #[error("size mismatch: expected {expected} values, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("eigensolver failure: {0}")]
    EigensolverFailure(String),

    #[error("state is not steady: |rhs| = {residual:.3e}")]
    NotSteady { residual: f64 },

    #[error("field is not a critical point: |residual|_inf = {residual:.3e}")]
    NotCritical { residual: f64 },

    #[error("field is not normalized: |phi|^2 = {norm_sq}")]
    NotNormalized { norm_sq: f64 },

    #[error("iteration diverged at step {step}: norm {norm:.3e}")]
    Diverged { step: usize, norm: f64 },

    #[error("Gram-Schmidt input is degenerate at vector {index} (residual norm {norm:.3e})")]
    DegenerateInput { index: usize, norm: f64 },

    #[error("domain truncation too small: boundary magnitude {magnitude:.3e}")]
    TruncationTooSmall { magnitude: f64 },

    #[error("unsupported potential kind `{0}`")]
    UnsupportedKind(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
