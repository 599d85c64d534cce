use thiserror::Error;

/// Errors surfaced by the model, solvers and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate likelihood: {clamped} per-observation mixture densities underflowed the floor")]
    DegenerateLikelihood { clamped: usize },

    #[error("covariate {index} is constant over the sample")]
    ConstantCovariate { index: usize },

    #[error("infeasible shift: {0}")]
    InfeasibleShift(String),

    #[error("all weights are zero")]
    WeightsAllZero,

    #[error("degenerate variance: weighted second moment below floor")]
    DegenerateVariance,

    #[error("solver diverged: parameter norm exceeded 1e6 (perfect-separation symptom)")]
    Diverged,

    #[error("singular Hessian: condition number above 1e12")]
    SingularHessian,

    #[error("mu grid degenerate: every grid point lies within 1e-6 of the null mean")]
    MuGridDegenerate,

    #[error("alpha {alpha} lies outside the feasible set (0, {sup}]")]
    InfeasibleAlpha { alpha: f64, sup: f64 },

    #[error("invalid initial estimate: {0}")]
    InitInvalid(String),

    #[error("invalid input: {0}")]
    BadInput(String),

    #[error("dataset schema error: {0}")]
    BadSchema(String),

    #[error("fit file error: {0}")]
    BadFitFile(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code used in error JSON emitted by the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateLikelihood { .. } => "DEGENERATE_LIKELIHOOD",
            Error::ConstantCovariate { .. } => "CONSTANT_COVARIATE",
            Error::InfeasibleShift(_) => "INFEASIBLE_SHIFT",
            Error::WeightsAllZero => "WEIGHTS_ALL_ZERO",
            Error::DegenerateVariance => "DEGENERATE_VARIANCE",
            Error::Diverged => "DIVERGED",
            Error::SingularHessian => "SINGULAR_HESSIAN",
            Error::MuGridDegenerate => "MU_GRID_DEGENERATE",
            Error::InfeasibleAlpha { .. } => "INFEASIBLE_ALPHA",
            Error::InitInvalid(_) => "INIT_INVALID",
            Error::BadInput(_) => "BAD_INPUT",
            Error::BadSchema(_) => "BAD_SCHEMA",
            Error::BadFitFile(_) => "BAD_FIT_FILE",
            Error::Io(_) => "IO",
            Error::Csv(_) => "CSV",
            Error::Json(_) => "JSON",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
