use thiserror::Error;

/// Failures of the dense linear-algebra layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("conjugate is not finite everywhere: quadratic term is not positive definite")]
    ConjugateNotFinite,
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
}

/// Failures raised by measurement-noise models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("unknown noise model `{name}` (valid: {valid})")]
    UnknownModel { name: String, valid: String },
    #[error("invalid parameter `{param}` for {model}: {reason}")]
    InvalidParameter {
        model: &'static str,
        param: String,
        reason: String,
    },
    #[error("{value} is outside the support of {model}")]
    OutsideSupport { model: &'static str, value: f64 },
    #[error("mode search for {0} found no sign change of the derivative")]
    ModeSearch(&'static str),
    #[error("dimension mismatch: model has {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Failures raised while stepping an estimator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("estimator `{estimator}` is not applicable: {reason}")]
    NotApplicable {
        estimator: &'static str,
        reason: &'static str,
    },
    #[error("estimator diverged at step {step}: {reason}")]
    Diverged { step: usize, reason: String },
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("unknown estimator `{name}` (valid: {valid})")]
    UnknownEstimator { name: String, valid: String },
}

impl FilterError {
    pub fn diverged(step: usize, reason: impl Into<String>) -> Self {
        FilterError::Diverged {
            step,
            reason: reason.into(),
        }
    }

    /// Stamps the step index onto a divergence error.
    pub fn at_step(self, k: usize) -> Self {
        match self {
            FilterError::Diverged { reason, .. } => FilterError::Diverged { step: k, reason },
            FilterError::Math(e) => FilterError::Diverged {
                step: k,
                reason: e.to_string(),
            },
            other => other,
        }
    }
}

/// Failures of experiment configuration and execution.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Math(#[from] MathError),
}
