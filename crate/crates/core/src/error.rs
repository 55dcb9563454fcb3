use thiserror::Error;

/// Errors raised by the likelihood-ratio library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LrError {
    #[error("{name} must be {requirement} (got {value})")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    /// The prior over the number of types puts no mass on `k > k_obs`.
    #[error("prior support excludes observed data (no mass on k >= {min_k})")]
    EmptySupport { min_k: u64 },

    #[error("series did not converge after {terms} terms (last index {k_last})")]
    NonConvergence { terms: u64, k_last: u64 },

    #[error("quadrature did not converge: estimated relative error {estimated_error:e}")]
    QuadratureNonConvergence { estimated_error: f64 },

    #[error("exact enumeration limited to m <= {max_m} and N <= {max_n} (got m = {m}, N = {n})")]
    ScaleExceeded {
        m: u64,
        n: u64,
        max_m: u64,
        max_n: u64,
    },

    #[error("importance weights degenerate: effective sample size {ess:.1} < {min_ess}")]
    DegenerateWeights { ess: f64, min_ess: f64 },

    #[error("the series likelihood ratio is only available for a symmetric Dirichlet with alpha = 1 (got {0})")]
    UnsupportedAlpha(f64),

    #[error("invalid sweep spec: {0}")]
    Spec(String),

    #[error("unknown figure '{0}' (expected fig5, fig6 or table3)")]
    UnknownFigure(String),

    #[error("invalid prior spec '{spec}': {reason}")]
    PriorSpec { spec: String, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl LrError {
    pub(crate) fn invalid(
        name: &'static str,
        requirement: &'static str,
        value: impl std::fmt::Display,
    ) -> Self {
        LrError::InvalidParameter {
            name,
            requirement,
            value: value.to_string(),
        }
    }
}

impl From<std::io::Error> for LrError {
    fn from(err: std::io::Error) -> Self {
        LrError::Io(err.to_string())
    }
}

pub type Result<T, E = LrError> = std::result::Result<T, E>;
