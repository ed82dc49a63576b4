use thiserror::Error;

/// Errors raised by the model, subdynamics, gate and DF-check routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("composite dimension {dim} exceeds capacity {cap}")]
    Capacity { dim: usize, cap: usize },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("resolvent singular at ν={nu}, gap={gap:e}")]
    SingularResolvent { nu: String, gap: f64 },

    #[error(
        "degenerate block at ν={nu}: second-order shift vanishes but partner couplings do not"
    )]
    DegenerateBlock { nu: String },

    #[error("normalization 1 + <φ|DC|φ> = {value:e} is not invertible at ν={nu}")]
    NonInvertibleNormalization { nu: String, value: f64 },

    #[error("eigenvector matching ambiguous for ν={nu}: cluster {cluster:?}")]
    AmbiguousMatching { nu: String, cluster: Vec<usize> },

    #[error("invalid state: eigenvalue {0:e} below tolerance")]
    InvalidState(f64),

    #[error("∫J dt never reaches π (mod 2π) within the profile")]
    UnreachableDuration,

    #[error("energy shifts are not uniformly distributed: max Δt deviation {deviation:e}")]
    NonUniformShift { deviation: f64 },

    #[error("singular triangulating transform: {0}")]
    SingularTransform(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("ratio undefined: n_{k} = 0")]
    RatioUndefined { k: usize },
}

impl SkeError {
    /// Whether the error is a numerical singularity rather than bad input.
    pub fn is_singularity(&self) -> bool {
        matches!(
            self,
            SkeError::SingularResolvent { .. }
                | SkeError::DegenerateBlock { .. }
                | SkeError::NonInvertibleNormalization { .. }
                | SkeError::AmbiguousMatching { .. }
                | SkeError::SingularTransform(_)
                | SkeError::InvalidState(_)
                | SkeError::UnreachableDuration
                | SkeError::NonUniformShift { .. }
                | SkeError::RatioUndefined { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, SkeError>;
