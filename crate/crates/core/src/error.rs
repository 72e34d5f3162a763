use thiserror::Error;

/// Failures reported by the numerical routines.
///
/// Variants are grouped by the CLI into validation errors and numerical
/// failures (see [`Error::is_numerical`]).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("condition violated: {0}")]
    ConditionViolated(String),

    #[error("({q}, {r}) is not an admissible pair in dimension {d}")]
    InvalidPair { d: usize, q: f64, r: f64 },

    #[error("no bound state: {0}")]
    NoBoundState(String),

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("decay certificate unbounded: maximand still growing at the grid edge (a = {a})")]
    CertificateUnbounded { a: f64 },

    #[error("no kink: {0}")]
    NoKink(String),

    #[error("kink quadrature singular: {0}")]
    QuadratureSingular(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("Duhamel quadrature under-resolved: halving the step changed the first iterate by {relative_change:.3e}")]
    QuadratureUnderResolved { relative_change: f64 },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("degenerate fit: only {usable} usable points")]
    DegenerateFit { usable: usize },
}

impl Error {
    /// Short machine-readable name, used in `error.json`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::ConditionViolated(_) => "ConditionViolated",
            Error::InvalidPair { .. } => "InvalidPair",
            Error::NoBoundState(_) => "NoBoundState",
            Error::NotConverged(_) => "NotConverged",
            Error::CertificateUnbounded { .. } => "CertificateUnbounded",
            Error::NoKink(_) => "NoKink",
            Error::QuadratureSingular(_) => "QuadratureSingular",
            Error::GridTooSmall(_) => "GridTooSmall",
            Error::NonFinite { .. } => "NonFinite",
            Error::QuadratureUnderResolved { .. } => "QuadratureUnderResolved",
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::DegenerateFit { .. } => "DegenerateFit",
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidInput(_)
                | Error::InvalidPair { .. }
                | Error::GridTooSmall(_)
                | Error::ConditionViolated(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
