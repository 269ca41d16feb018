use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Data,
    Numeric,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyData,
    #[error("no observed events: every row is censored")]
    AllCensored,
    #[error("tau = {tau} exceeds the largest observed time {max_time}")]
    TauOutOfRange { tau: f64, max_time: f64 },
    #[error("tau must be positive and finite, got {0}")]
    BadTau(f64),
    #[error("leave-one-out sample without row {index} has no events")]
    DegenerateJackknife { index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("design matrix is rank deficient")]
    SingularDesign,
    #[error("invalid fold count V = {folds} for n = {n} (minimum {min})")]
    BadFoldCount { folds: usize, n: usize, min: usize },
    #[error("KM fold {km_fold} of rotation {rotation} has no events")]
    DegenerateKmFold { rotation: usize, km_fold: usize },
    #[error("censoring survival estimate is zero at row {index}")]
    ZeroCensorWeight { index: usize },
    #[error("bound audit requires clamp mode to be enabled")]
    ClampRequired,
    #[error("unknown learner `{0}`")]
    UnknownLearner(String),
    #[error("learner `{learner}`: {message}")]
    BadHyperparameter { learner: String, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable code, qualified by the module that raises it.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyData => "data.empty",
            Error::AllCensored => "survival.all_censored",
            Error::TauOutOfRange { .. } => "pseudo_obs.tau_out_of_range",
            Error::BadTau(_) => "survival.bad_tau",
            Error::DegenerateJackknife { .. } => "pseudo_obs.degenerate_jackknife",
            Error::DimensionMismatch { .. } => "learners.dimension_mismatch",
            Error::NonFinite(_) => "learners.non_finite",
            Error::SingularDesign => "learners.singular_design",
            Error::BadFoldCount { .. } => "super_learner.bad_fold_count",
            Error::DegenerateKmFold { .. } => "super_learner.degenerate_km_fold",
            Error::ZeroCensorWeight { .. } => "evaluation.zero_censor_weight",
            Error::ClampRequired => "evaluation.clamp_required",
            Error::UnknownLearner(_) => "learners.unknown",
            Error::BadHyperparameter { .. } => "learners.bad_hyperparameter",
            Error::InvalidArgument(_) => "config.invalid_argument",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::UnknownLearner(_)
            | Error::BadHyperparameter { .. }
            | Error::BadFoldCount { .. }
            | Error::BadTau(_)
            | Error::ClampRequired
            | Error::InvalidArgument(_) => ErrorClass::Validation,
            Error::EmptyData
            | Error::AllCensored
            | Error::TauOutOfRange { .. }
            | Error::DimensionMismatch { .. }
            | Error::DegenerateKmFold { .. } => ErrorClass::Data,
            Error::DegenerateJackknife { .. }
            | Error::NonFinite(_)
            | Error::SingularDesign
            | Error::ZeroCensorWeight { .. } => ErrorClass::Numeric,
        }
    }
}
