use thiserror::Error;

pub type Result<T, E = SteepError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteepError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("unsupported configuration: n_A = {n_a} < n_B = {n_b}; swap the roles of the two users so that the prober has at least as many antennas")]
    UnsupportedConfiguration { n_a: usize, n_b: usize },

    #[error("singular channel: {0}")]
    SingularChannel(String),

    /// The classic channel-strength ratio needs `H_BA^H H_BA` to be nonsingular.
    #[error("channel-strength ratio undefined: {0}")]
    RatioUndefined(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("capacity {value} is negative beyond round-off in {context}")]
    NegativeCapacity { context: &'static str, value: f64 },

    #[error("internal consistency check failed in {context}: {detail}")]
    InternalConsistency { context: &'static str, detail: String },

    #[error("degenerate link: {0}")]
    DegenerateLink(String),

    #[error("bound not applicable: {0}")]
    BoundNotApplicable(String),

    #[error("threshold not applicable: {0}")]
    ThresholdNotApplicable(String),

    #[error("insufficient samples: need at least {min}, got {got}")]
    InsufficientSamples { min: usize, got: usize },
}

pub(crate) fn invalid(msg: impl Into<String>) -> SteepError {
    SteepError::InvalidArgument(msg.into())
}
