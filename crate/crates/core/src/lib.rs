//! Restricted mean survival time prediction under right censoring.
//!
//! Censored outcomes are replaced by jackknife pseudo-observations (standard
//! or split) and fed to a cross-validated super learner built over a library
//! of ordinary regressors. The [`evaluation`] module audits the resulting
//! selector against Monte Carlo ground truth from [`simulation`].

pub mod data;
mod dd;
pub mod error;
pub mod evaluation;
pub mod learners;
pub mod pseudo_obs;
pub mod simulation;
pub mod super_learner;
pub mod survival;

pub use data::{Dataset, Observation};
pub use error::{Error, ErrorClass, Result};
pub use learners::{fit_learner, nnls, predict, FittedModel, LearnerKind, LearnerSpec};
pub use pseudo_obs::{
    split_pobs, split_pobs_with, standard_pobs, standard_pobs_naive, standard_pobs_with,
    PobsKind, PobsOptions, PseudoObservationSet,
};
pub use simulation::{select_tau, simulate, true_rmst, Scheme, SimConfig, SimulatedDataset};
pub use survival::{km_fit, rmst, survival_at, SurvivalCurve};
pub use evaluation::{
    audit_oracle_inequality, cv_risk_report, true_conditional_risk, wrss, AuditConfig, BoundAudit,
    LatentSample, RiskReport,
};
pub use super_learner::{
    cv_level_one_split, cv_level_one_standard, fit_super_learner, make_folds, select_discrete,
    sl_predict, Algorithm, Ensemble, FoldAssignment, LevelOneData, Mode, SuperLearnerConfig,
    SuperLearnerModel,
};

/// Dense matrix type used for covariates and level-one predictions.
pub use nalgebra::DMatrix;
