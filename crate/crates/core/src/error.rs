use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A point or parameter lies outside the set where an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("strong ellipticity violated: measured lambda = {measured:.6e}")]
    Ellipticity { measured: f64 },

    #[error("invalid coefficients: {0}")]
    Coefficients(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("singular element {index}: signed area {area:.3e}")]
    SingularElement { index: usize, area: f64 },

    #[error("linear solve did not reach tolerance: relative residual {residual:.3e}")]
    SolveFailed { residual: f64 },

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
