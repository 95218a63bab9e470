use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPd { min_eigenvalue: f64 },
    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("matrix is not a strict contraction (margin {margin:e})")]
    NotContraction { margin: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("grid size {0} must be a power of two >= 8")]
    BadGridSize(usize),
    #[error("total mass is singular (min eigenvalue {min_eigenvalue:e})")]
    NotNormalizable { min_eigenvalue: f64 },
    #[error("density sample {index} is not Hermitian PSD: {reason}")]
    BadSample { index: usize, reason: String },
    #[error("measure is not normalized (deviation {deviation:e})")]
    NotNormalized { deviation: f64 },
    #[error("moment order {order} exceeds quadrature budget {max}")]
    MomentOrderTooHigh { order: i64, max: i64 },
    #[error("evaluation radius {radius} exceeds 0.99")]
    RadiusTooLarge { radius: f64 },

    #[error("polynomial with {len} coefficients does not fit declared degree {degree}")]
    DegreeMismatch { len: usize, degree: usize },
    #[error("moments available up to order {available}, need {needed}")]
    InsufficientMoments { available: usize, needed: usize },
    #[error("measure is trivial at degree {degree} (Toeplitz min eigenvalue {min_eigenvalue:e})")]
    TrivialMeasure { degree: usize, min_eigenvalue: f64 },
    #[error("Gram-Schmidt and Schur extractions disagree at k = {index} (deviation {deviation:e})")]
    ConventionCheckFailed { index: usize, deviation: f64 },
    #[error("orthonormal polynomial is numerically singular at grid node {node}")]
    SingularPolynomial { node: usize },

    #[error("singular pencil in {context}")]
    SingularPencil { context: &'static str },
    #[error("Schur recursion depth exceeded at level {level} (margin {margin:e})")]
    DepthExceeded { level: usize, margin: f64 },

    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable identifier used in the CLI's machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotPsd { .. } => "NotPSD",
            Error::NotPd { .. } => "NotPD",
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NotContraction { .. } => "NotContraction",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonFinite => "NonFinite",
            Error::BadGridSize(_) => "BadGridSize",
            Error::NotNormalizable { .. } => "NotNormalizable",
            Error::BadSample { .. } => "BadSample",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::MomentOrderTooHigh { .. } => "MomentOrderTooHigh",
            Error::RadiusTooLarge { .. } => "RadiusTooLarge",
            Error::DegreeMismatch { .. } => "DegreeMismatch",
            Error::InsufficientMoments { .. } => "InsufficientMoments",
            Error::TrivialMeasure { .. } => "TrivialMeasure",
            Error::ConventionCheckFailed { .. } => "ConventionCheckFailed",
            Error::SingularPolynomial { .. } => "SingularPolynomial",
            Error::SingularPencil { .. } => "SingularPencil",
            Error::DepthExceeded { .. } => "DepthExceeded",
            Error::BadConfig(_) => "BadConfig",
            Error::Format(_) => "Format",
            Error::Io(_) => "Io",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
