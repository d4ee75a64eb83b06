use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,

    #[error("occupation panel {estab_id}/{soc} has no employees")]
    NoEmployees { estab_id: String, soc: String },

    #[error("design matrix is singular: {0}")]
    SingularDesign(String),

    #[error(
        "Newton iteration did not converge after {iterations} iterations \
         (loglik {loglik:.6}, gradient max-norm {gradient_norm:.3e}): {reason}"
    )]
    Nonconvergence {
        iterations: usize,
        loglik: f64,
        gradient_norm: f64,
        reason: String,
    },

    #[error("linear predictor is not finite; rescale the covariates")]
    NumericOverflow,

    #[error("no fitted model available for occupation {0}")]
    ModelUnavailable(String),

    #[error("no responding donor panels for occupation {0}")]
    NoDonors(String),

    #[error("total employment is zero")]
    ZeroEmployees,

    #[error("fraction {0} is outside (0, 1)")]
    InvalidFraction(f64),

    #[error("domain filter selects no panels")]
    EmptyDomain,

    #[error("response propensity {propensity} for establishment {estab_id} is outside (0, 1]")]
    InvalidPropensity { estab_id: String, propensity: f64 },

    #[error("every simulation replicate failed")]
    NoResults,

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
