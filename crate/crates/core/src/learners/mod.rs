//! Candidate regressors for the super learner library.
//!
//! Every learner goes through the same [`fit_learner`] / [`FittedModel::predict`]
//! pair. Hyperparameters travel as a name → number map so a library can be
//! described in a JSON run configuration.

mod knn;
mod linear;
mod nnls;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use knn::KnnModel;
pub use linear::{lasso_kkt_residual, LinearModel};
pub use nnls::{nnls, nnls_unnormalized};
pub use tree::{Forest, RegressionTree, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Mean,
    Ols,
    Ridge,
    Lasso,
    Knn,
    Tree,
    Forest,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 7] = [
        LearnerKind::Mean,
        LearnerKind::Ols,
        LearnerKind::Ridge,
        LearnerKind::Lasso,
        LearnerKind::Knn,
        LearnerKind::Tree,
        LearnerKind::Forest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Mean => "mean",
            LearnerKind::Ols => "ols",
            LearnerKind::Ridge => "ridge",
            LearnerKind::Lasso => "lasso",
            LearnerKind::Knn => "knn",
            LearnerKind::Tree => "tree",
            LearnerKind::Forest => "forest",
        }
    }

    /// Accepted hyperparameters with their defaults.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            LearnerKind::Mean => &[],
            LearnerKind::Ols => &[("pinv", 1.0)],
            LearnerKind::Ridge => &[("lambda", 0.01)],
            LearnerKind::Lasso => &[("lambda", 0.01), ("max_iter", 10_000.0), ("tol", 1e-10)],
            LearnerKind::Knn => &[("k", 15.0)],
            LearnerKind::Tree => &[("max_depth", 0.0), ("min_leaf", 5.0), ("mtry", 0.0)],
            LearnerKind::Forest => &[
                ("n_trees", 200.0),
                ("mtry", 0.0),
                ("min_leaf", 5.0),
                ("max_depth", 0.0),
                ("bootstrap", 1.0),
                ("seed", 0.0),
            ],
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownLearner(s.to_string()))
    }
}

/// A library entry: learner name plus hyperparameter overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    pub name: LearnerKind,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, f64>,
}

impl LearnerSpec {
    pub fn new(name: LearnerKind) -> Self {
        Self { name, hyperparameters: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.hyperparameters.insert(key.to_string(), value);
        self
    }

    fn bad(&self, message: String) -> Error {
        Error::BadHyperparameter { learner: self.name.to_string(), message }
    }

    /// Rejects unknown keys and non-finite values.
    pub fn validate(&self) -> Result<()> {
        let allowed = self.name.defaults();
        for (key, value) in &self.hyperparameters {
            if !allowed.iter().any(|(k, _)| k == key) {
                return Err(self.bad(format!("unknown hyperparameter `{key}`")));
            }
            if !value.is_finite() {
                return Err(self.bad(format!("`{key}` must be finite")));
            }
        }
        Ok(())
    }

    /// Value of a hyperparameter, falling back to the documented default.
    pub fn get(&self, key: &str) -> f64 {
        self.hyperparameters.get(key).copied().unwrap_or_else(|| {
            self.name
                .defaults()
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .unwrap_or(0.0)
        })
    }

    fn nonneg(&self, key: &str) -> Result<f64> {
        let v = self.get(key);
        if v < 0.0 {
            return Err(self.bad(format!("`{key}` must be >= 0, got {v}")));
        }
        Ok(v)
    }

    fn count(&self, key: &str, min: usize) -> Result<usize> {
        let v = self.get(key);
        if v.fract() != 0.0 || v < min as f64 {
            return Err(self.bad(format!("`{key}` must be an integer >= {min}, got {v}")));
        }
        Ok(v as usize)
    }

    fn flag(&self, key: &str) -> bool {
        self.get(key) != 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    Constant { value: f64 },
    Linear(LinearModel),
    Knn(KnnModel),
    Tree(RegressionTree),
    Forest(Forest),
}

/// A learner fitted on one training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: LearnerSpec,
    pub train_d: usize,
    pub params: ModelParams,
}

impl FittedModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.train_d {
            return Err(Error::DimensionMismatch { expected: self.train_d, got: x.ncols() });
        }
        Ok(match &self.params {
            ModelParams::Constant { value } => vec![*value; x.nrows()],
            ModelParams::Linear(m) => m.predict(x),
            ModelParams::Knn(m) => m.predict(x),
            ModelParams::Tree(t) => (0..x.nrows()).map(|i| t.predict_row(x, i)).collect(),
            ModelParams::Forest(f) => f.predict(x),
        })
    }

    /// Predictions clamped to `[0, tau]`.
    pub fn predict_clamped(&self, x: &DMatrix<f64>, tau: f64) -> Result<Vec<f64>> {
        let mut out = self.predict(x)?;
        for v in &mut out {
            *v = v.clamp(0.0, tau);
        }
        Ok(out)
    }
}

/// Free-function form of [`FittedModel::predict`].
pub fn predict(model: &FittedModel, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    model.predict(x)
}

pub fn fit_learner(spec: &LearnerSpec, x: &DMatrix<f64>, y: &[f64]) -> Result<FittedModel> {
    spec.validate()?;
    let n = x.nrows();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design matrix"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("targets"));
    }
    let yv = DVector::from_column_slice(y);
    let params = match spec.name {
        LearnerKind::Mean => ModelParams::Constant { value: yv.mean() },
        LearnerKind::Ols => ModelParams::Linear(linear::fit_ols(x, &yv, spec.flag("pinv"))?),
        LearnerKind::Ridge => ModelParams::Linear(linear::fit_ridge(x, &yv, spec.nonneg("lambda")?)),
        LearnerKind::Lasso => ModelParams::Linear(
            linear::fit_lasso(
                x,
                &yv,
                spec.nonneg("lambda")?,
                spec.count("max_iter", 1)?,
                spec.nonneg("tol")?,
            )
            .0,
        ),
        LearnerKind::Knn => ModelParams::Knn(KnnModel::fit(x, y, spec.count("k", 1)?)),
        LearnerKind::Tree => {
            let settings = tree::TreeSettings {
                max_depth: spec.count("max_depth", 0)?,
                min_leaf: spec.count("min_leaf", 1)?,
                mtry: spec.count("mtry", 0)?,
            };
            ModelParams::Tree(RegressionTree::fit(x, y, &settings))
        }
        LearnerKind::Forest => {
            let settings = tree::ForestSettings {
                n_trees: spec.count("n_trees", 1)?,
                tree: tree::TreeSettings {
                    max_depth: spec.count("max_depth", 0)?,
                    min_leaf: spec.count("min_leaf", 1)?,
                    mtry: match spec.count("mtry", 0)? {
                        0 => (x.ncols() / 3).max(1),
                        m => m,
                    },
                },
                bootstrap: spec.flag("bootstrap"),
                seed: spec.count("seed", 0)? as u64,
            };
            ModelParams::Forest(Forest::fit(x, y, &settings))
        }
    };
    Ok(FittedModel { spec: spec.clone(), train_d: x.ncols(), params })
}
