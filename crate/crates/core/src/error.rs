use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point is not in the upper half-plane (im = {0})")]
    NotInHalfPlane(f64),

    #[error("matrix determinant {det} is not 1")]
    Determinant { det: f64 },

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("element is not hyperbolic")]
    NotHyperbolic,

    #[error("scale must be positive, got {0}")]
    NonpositiveScale(f64),

    #[error("degenerate configuration: {0}")]
    Degenerate(&'static str),

    #[error("element budget of {cap} exceeded")]
    BudgetExceeded { cap: usize },

    #[error("Dirichlet descent did not converge within {steps} steps")]
    NoConvergence { steps: usize },

    #[error("invalid band [{a}, {b}]")]
    InvalidBand { a: f64, b: f64 },

    #[error("base point off the unit circle (|z| = {modulus})")]
    BaseOffCircle { modulus: f64 },

    #[error("not a root path: {0}")]
    NotAPath(String),

    #[error("no Busemann cluster of size >= 3 (largest has {largest})")]
    NoCluster { largest: usize },

    #[error("no crossing escapes beyond |xi| >= {threshold}")]
    EscapeFail { threshold: f64 },

    #[error("boundary point gamma^k(inf) is inf")]
    DegenerateXi,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
