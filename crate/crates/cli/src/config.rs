use std::path::{Path, PathBuf};

use rmst_sl::{Algorithm, LearnerKind, LearnerSpec, Mode, PobsKind, SimConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// One JSON document configuring every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Drives fold assignment, pobs splits and audit replications.
    pub seed: u64,
    pub simulation: SimConfig,
    pub library: Vec<LearnerSpec>,
    pub folds: usize,
    /// Fixed horizon; when absent it is the `tau_quantile` quantile of the observed times.
    pub tau: Option<f64>,
    pub tau_quantile: f64,
    pub mode: Mode,
    pub algorithm: Algorithm,
    /// Clamp pseudo-values to `[-tau, tau]` and predictions to `[0, tau]`.
    pub clamp: bool,
    /// Dataset CSV for `pobs`, `fit`, `predict` and `evaluate`.
    pub input: Option<PathBuf>,
    /// Model JSON for `predict` and `evaluate`.
    pub model: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub pobs: PobsSection,
    pub evaluate: EvaluateSection,
    pub audit: AuditSection,
    pub bench: BenchSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PobsSection {
    pub kind: PobsKind,
    /// Share of rows receiving split pseudo-values; the rest form the KM sample.
    pub split_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    /// Size of the fresh latent test sample in simulation mode.
    pub test_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSection {
    pub gamma: f64,
    /// Bound on pseudo-values and predictions; defaults to tau.
    pub m: Option<f64>,
    pub replications: usize,
    pub test_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub sizes: Vec<usize>,
    pub repeats: usize,
}

pub fn default_library() -> Vec<LearnerSpec> {
    [LearnerKind::Ols, LearnerKind::Lasso, LearnerKind::Knn, LearnerKind::Tree, LearnerKind::Forest]
        .into_iter()
        .map(LearnerSpec::new)
        .collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            simulation: SimConfig::default(),
            library: default_library(),
            folds: 6,
            tau: None,
            tau_quantile: 0.9,
            mode: Mode::Continuous,
            algorithm: Algorithm::StandardPobs,
            clamp: false,
            input: None,
            model: None,
            output_dir: PathBuf::from("out"),
            pobs: PobsSection::default(),
            evaluate: EvaluateSection::default(),
            audit: AuditSection::default(),
            bench: BenchSection::default(),
        }
    }
}

impl Default for PobsSection {
    fn default() -> Self {
        Self { kind: PobsKind::Standard, split_ratio: 0.5 }
    }
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self { test_n: 10_000 }
    }
}

impl Default for AuditSection {
    fn default() -> Self {
        Self { gamma: 1.0, m: None, replications: 50, test_n: 10_000 }
    }
}

impl Default for BenchSection {
    fn default() -> Self {
        Self { sizes: vec![100, 500, 2000], repeats: 5 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |message: String| CliError::Config { path: "config".into(), message };
        self.simulation.validate()?;
        if self.library.is_empty() {
            return Err(bad("`library` must list at least one learner".into()));
        }
        for spec in &self.library {
            spec.validate()?;
        }
        if self.folds < 2 {
            return Err(bad(format!("`folds` must be at least 2, got {}", self.folds)));
        }
        if let Some(tau) = self.tau {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(bad(format!("`tau` must be positive, got {tau}")));
            }
        }
        if !(self.tau_quantile > 0.0 && self.tau_quantile < 1.0) {
            return Err(bad(format!("`tau_quantile` must lie in (0, 1), got {}", self.tau_quantile)));
        }
        if !(self.pobs.split_ratio > 0.0 && self.pobs.split_ratio < 1.0) {
            return Err(bad(format!("`pobs.split_ratio` must lie in (0, 1), got {}", self.pobs.split_ratio)));
        }
        if self.evaluate.test_n == 0 || self.audit.test_n == 0 {
            return Err(bad("`test_n` must be positive".into()));
        }
        if !(self.audit.gamma.is_finite() && self.audit.gamma > 0.0) {
            return Err(bad(format!("`audit.gamma` must be positive, got {}", self.audit.gamma)));
        }
        if self.bench.repeats == 0 || self.bench.sizes.is_empty() {
            return Err(bad("`bench` needs at least one size and one repeat".into()));
        }
        Ok(())
    }
}
