//! V-fold super learners trained on pseudo-observations.
//!
//! Two ways of building the level-one (out-of-fold) data are provided:
//!
//! * [`Algorithm::StandardPobs`]: standard pseudo-values are computed once on
//!   the whole sample, then fold `v` is predicted by learners trained on the
//!   other folds.
//! * [`Algorithm::SplitPobs`]: in rotation `v`, fold `v` is the validation
//!   set, fold `v + 1` (wrapping) is the KM set used to build split
//!   pseudo-values for the validation rows, and the remaining folds train the
//!   candidates on their own standard pseudo-values.
//!
//! Either way the final candidates are refitted on standard pseudo-values of
//! the full sample, and combined by the selected index (discrete) or by
//! normalized NNLS weights (continuous).

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::{fit_learner, nnls_unnormalized, FittedModel, LearnerSpec};
use crate::pseudo_obs::{split_pobs_with, standard_pobs_with, PobsOptions};

/// Balanced random partition of `0..n` into `folds` groups (0-based labels).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub n: usize,
    pub folds: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.folds];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles `0..n` with ChaCha8(`seed`) and deals the indices round-robin.
pub fn make_folds(n: usize, folds: usize, seed: u64) -> Result<FoldAssignment> {
    if folds < 2 || folds > n {
        return Err(Error::BadFoldCount { folds, n, min: 2 });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    Ok(FoldAssignment { n, folds, fold_of })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    StandardPobs,
    SplitPobs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Discrete,
    Continuous,
}

/// Out-of-fold candidate predictions and the pseudo-values they are scored against.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelOneData {
    /// `n x K`; entry `(i, k)` comes from candidate `k` trained without row `i`'s fold.
    pub predictions: DMatrix<f64>,
    pub targets: Vec<f64>,
    pub cv_risks: Vec<f64>,
}

impl LevelOneData {
    fn new(predictions: DMatrix<f64>, targets: Vec<f64>) -> Self {
        let n = targets.len() as f64;
        let cv_risks = predictions
            .column_iter()
            .map(|col| col.iter().zip(&targets).map(|(p, y)| (y - p) * (y - p)).sum::<f64>() / n)
            .collect();
        Self { predictions, targets, cv_risks }
    }
}

/// Bounds applied when auditing against boundedness assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampMode {
    /// Pseudo-values are clamped to `[-bound, bound]`.
    pub bound: f64,
}

/// Everything produced by one cross-validation pass.
#[derive(Debug, Clone)]
pub struct CrossValidation {
    pub level_one: LevelOneData,
    /// `fold_models[v][k]`: candidate `k` trained in rotation `v`.
    pub fold_models: Vec<Vec<FittedModel>>,
    /// Rows each rotation's candidates were trained on.
    pub train_rows: Vec<Vec<usize>>,
    /// KM rows per rotation (empty for the standard algorithm).
    pub km_rows: Vec<Vec<usize>>,
}

fn pobs_options(clamp: Option<ClampMode>, extend: bool) -> PobsOptions {
    PobsOptions { clamp: clamp.map(|c| (-c.bound, c.bound)), extend_beyond_data: extend }
}

fn predict_candidate(model: &FittedModel, x: &DMatrix<f64>, tau: f64, clamp: bool) -> Result<Vec<f64>> {
    if clamp {
        model.predict_clamped(x, tau)
    } else {
        model.predict(x)
    }
}

fn fit_library(library: &[LearnerSpec], x: &DMatrix<f64>, y: &[f64]) -> Result<Vec<FittedModel>> {
    library.iter().map(|spec| fit_learner(spec, x, y)).collect()
}

fn check_library(library: &[LearnerSpec]) -> Result<()> {
    if library.is_empty() {
        return Err(Error::InvalidArgument("candidate library is empty".into()));
    }
    library.iter().try_for_each(LearnerSpec::validate)
}

/// Level-one data for the standard-pseudo-observation algorithm.
pub fn cv_level_one_standard(
    data: &Dataset,
    library: &[LearnerSpec],
    folds: &FoldAssignment,
    tau: f64,
) -> Result<LevelOneData> {
    Ok(cross_validate(data, library, folds, tau, Algorithm::StandardPobs, None)?.level_one)
}

/// Level-one data for the split-pseudo-observation algorithm.
pub fn cv_level_one_split(
    data: &Dataset,
    library: &[LearnerSpec],
    folds: &FoldAssignment,
    tau: f64,
) -> Result<LevelOneData> {
    Ok(cross_validate(data, library, folds, tau, Algorithm::SplitPobs, None)?.level_one)
}

/// Runs every fold rotation of the chosen algorithm.
///
/// Rotations run in parallel; rows are written back by index so the output
/// does not depend on scheduling.
pub fn cross_validate(
    data: &Dataset,
    library: &[LearnerSpec],
    folds: &FoldAssignment,
    tau: f64,
    algorithm: Algorithm,
    clamp: Option<ClampMode>,
) -> Result<CrossValidation> {
    check_library(library)?;
    if folds.n != data.len() {
        return Err(Error::DimensionMismatch { expected: data.len(), got: folds.n });
    }
    let min_folds = match algorithm {
        Algorithm::StandardPobs => 2,
        Algorithm::SplitPobs => 3,
    };
    if folds.folds < min_folds {
        return Err(Error::BadFoldCount { folds: folds.folds, n: folds.n, min: min_folds });
    }
    let v_count = folds.folds;
    let x = data.design_matrix();
    let clamp_predictions = clamp.is_some();

    // standard pseudo-values are computed once, before any fold is formed
    let global_targets = match algorithm {
        Algorithm::StandardPobs => Some(standard_pobs_with(data, tau, &pobs_options(clamp, false))?.values),
        Algorithm::SplitPobs => None,
    };

    struct Rotation {
        validation: Vec<usize>,
        train: Vec<usize>,
        km: Vec<usize>,
        targets: Vec<f64>,
        predictions: Vec<Vec<f64>>,
        models: Vec<FittedModel>,
    }

    let rotations: Vec<Rotation> = (0..v_count)
        .into_par_iter()
        .map(|v| -> Result<Rotation> {
            let validation = folds.members(v);
            let (train, km, train_targets, targets) = match &global_targets {
                Some(gamma) => {
                    let train: Vec<usize> = (0..data.len()).filter(|&i| folds.fold_of[i] != v).collect();
                    let train_targets = train.iter().map(|&i| gamma[i]).collect();
                    let targets = validation.iter().map(|&i| gamma[i]).collect();
                    (train, Vec::new(), train_targets, targets)
                }
                None => {
                    let km_fold = (v + 1) % v_count;
                    let km = folds.members(km_fold);
                    let train: Vec<usize> = (0..data.len())
                        .filter(|&i| folds.fold_of[i] != v && folds.fold_of[i] != km_fold)
                        .collect();
                    let km_set = data.subset(&km);
                    if km_set.n_events() == 0 {
                        return Err(Error::DegenerateKmFold { rotation: v, km_fold });
                    }
                    let opts = pobs_options(clamp, true);
                    let targets = split_pobs_with(&km_set, &data.subset(&validation), tau, &opts)?.values;
                    let train_targets = standard_pobs_with(&data.subset(&train), tau, &opts)?.values;
                    (train, km, train_targets, targets)
                }
            };
            let x_train = x.select_rows(&train);
            let x_valid = x.select_rows(&validation);
            let models = fit_library(library, &x_train, &train_targets)?;
            let predictions = models
                .iter()
                .map(|m| predict_candidate(m, &x_valid, tau, clamp_predictions))
                .collect::<Result<Vec<_>>>()?;
            Ok(Rotation { validation, train, km, targets, predictions, models })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let n = data.len();
    let mut z = DMatrix::zeros(n, library.len());
    let mut targets = vec![0.0; n];
    let mut fold_models = Vec::with_capacity(v_count);
    let mut train_rows = Vec::with_capacity(v_count);
    let mut km_rows = Vec::with_capacity(v_count);
    for rot in rotations {
        for (pos, &i) in rot.validation.iter().enumerate() {
            targets[i] = rot.targets[pos];
            for (k, col) in rot.predictions.iter().enumerate() {
                z[(i, k)] = col[pos];
            }
        }
        fold_models.push(rot.models);
        train_rows.push(rot.train);
        km_rows.push(rot.km);
    }
    Ok(CrossValidation { level_one: LevelOneData::new(z, targets), fold_models, train_rows, km_rows })
}

/// Index of the smallest cross-validated risk; ties go to the lowest index.
pub fn select_discrete(level_one: &LevelOneData) -> usize {
    argmin(&level_one.cv_risks)
}

pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperLearnerConfig {
    pub library: Vec<LearnerSpec>,
    pub folds: usize,
    pub tau: f64,
    pub mode: Mode,
    pub algorithm: Algorithm,
    pub seed: u64,
    #[serde(default)]
    pub clamp: Option<ClampMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Ensemble {
    Discrete { selected: usize, model: FittedModel },
    Continuous { weights: Vec<f64>, models: Vec<FittedModel> },
}

/// A fitted super learner, serializable as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperLearnerModel {
    pub algorithm: Algorithm,
    pub library: Vec<LearnerSpec>,
    pub tau: f64,
    pub cv_risks: Vec<f64>,
    /// Clamp candidate predictions to `[0, tau]`.
    pub clamp_predictions: bool,
    pub ensemble: Ensemble,
}

impl SuperLearnerModel {
    pub fn mode(&self) -> Mode {
        match self.ensemble {
            Ensemble::Discrete { .. } => Mode::Discrete,
            Ensemble::Continuous { .. } => Mode::Continuous,
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        match &self.ensemble {
            Ensemble::Discrete { model, .. } => predict_candidate(model, x, self.tau, self.clamp_predictions),
            Ensemble::Continuous { weights, models } => {
                let mut out = vec![0.0; x.nrows()];
                for (w, m) in weights.iter().zip(models) {
                    let p = predict_candidate(m, x, self.tau, self.clamp_predictions)?;
                    for (o, v) in out.iter_mut().zip(p) {
                        *o += w * v;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Free-function form of [`SuperLearnerModel::predict`].
pub fn sl_predict(model: &SuperLearnerModel, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    model.predict(x)
}

/// A fitted model together with the cross-validation pass that produced it.
#[derive(Debug, Clone)]
pub struct SuperLearnerFit {
    pub model: SuperLearnerModel,
    pub folds: FoldAssignment,
    pub cv: CrossValidation,
    /// Unnormalized NNLS weights (continuous mode only).
    pub raw_weights: Option<Vec<f64>>,
}

pub fn fit_super_learner(data: &Dataset, config: &SuperLearnerConfig) -> Result<SuperLearnerModel> {
    Ok(fit_super_learner_detailed(data, config)?.model)
}

pub fn fit_super_learner_detailed(data: &Dataset, config: &SuperLearnerConfig) -> Result<SuperLearnerFit> {
    let folds = make_folds(data.len(), config.folds, config.seed)?;
    let cv = cross_validate(data, &config.library, &folds, config.tau, config.algorithm, config.clamp)?;

    // final candidates always train on full-sample standard pseudo-values
    let gamma = standard_pobs_with(data, config.tau, &pobs_options(config.clamp, false))?.values;
    let x = data.design_matrix();
    let (ensemble, raw_weights) = match config.mode {
        Mode::Discrete => {
            let selected = select_discrete(&cv.level_one);
            let model = fit_learner(&config.library[selected], &x, &gamma)?;
            (Ensemble::Discrete { selected, model }, None)
        }
        Mode::Continuous => {
            let raw = nnls_unnormalized(&cv.level_one.predictions, &cv.level_one.targets)?;
            let total: f64 = raw.iter().sum();
            let weights = if total > 0.0 {
                raw.iter().map(|w| w / total).collect()
            } else {
                vec![1.0 / raw.len() as f64; raw.len()]
            };
            let models = fit_library(&config.library, &x, &gamma)?;
            (Ensemble::Continuous { weights, models }, Some(raw))
        }
    };
    let model = SuperLearnerModel {
        algorithm: config.algorithm,
        library: config.library.clone(),
        tau: config.tau,
        cv_risks: cv.level_one.cv_risks.clone(),
        clamp_predictions: config.clamp.is_some(),
        ensemble,
    };
    Ok(SuperLearnerFit { model, folds, cv, raw_weights })
}
