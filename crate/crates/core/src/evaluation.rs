//! Risk estimates and theory audits.
//!
//! Cross-validated risks come straight from level-one data. True conditional
//! risks are Monte Carlo estimates on fresh latent samples from the simulator,
//! with `true_rmst` standing in for the optimal predictor. The bound audit
//! compares the selector's excess risk over that optimum with the finite-sample
//! oracle bound; the optimum of the pseudo-value risk itself is not computable,
//! so the audit uses the latent-outcome optimum in its place.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::{FittedModel, LearnerSpec};
use crate::pseudo_obs::{split_pobs_with, standard_pobs_with, PobsOptions};
use crate::simulation::{select_tau, simulate_stream, stream_rng, true_rmst_eta, SimConfig};
use crate::super_learner::{
    argmin, cross_validate, make_folds, Algorithm, ClampMode, LevelOneData, SuperLearnerFit,
};
use crate::survival::km_fit;

/// Description of the censoring weights, echoed into reports.
pub const WRSS_FORMULA: &str =
    "wrss = (1/n) sum_i w_i (min(t_i, tau) - pred_i)^2, w_i = D_i / G(min(t_i, tau)-), \
     D_i = 1 if event or t_i >= tau else 0, G = Kaplan-Meier of the censoring times (left limit)";

/// Header note for audits against the latent optimum.
pub const AUDIT_NOTE: &str =
    "excess risks are measured against the latent-outcome optimum theta* = E[(min(T*, tau) - psi*(Z))^2] \
     with psi* the true conditional RMST; the pseudo-value optimum is not computable, so this is an \
     approximation of the bounded quantity rather than an exact check";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub per_candidate_cv_risk: Vec<f64>,
    pub selected: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_candidate_true_risk: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_candidate_true_risk_stderr: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimal_risk: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimal_risk_stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sl_true_risk: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sl_wrss: Option<f64>,
    pub notes: Vec<String>,
}

impl RiskReport {
    /// Aligned text table, one row per candidate.
    pub fn to_table(&self, library: &[LearnerSpec]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<4} {:<10} {:>14} {:>14} {:>6}", "k", "learner", "cv_risk", "true_risk", "flag");
        for (k, cv) in self.per_candidate_cv_risk.iter().enumerate() {
            let name = library.get(k).map_or("?", |s| s.name.as_str());
            let truth = self
                .per_candidate_true_risk
                .as_ref()
                .map_or_else(|| "-".to_string(), |t| format!("{:.6}", t[k]));
            let mut flag = String::new();
            if k == self.selected {
                flag.push('S');
            }
            if self.oracle == Some(k) {
                flag.push('O');
            }
            let _ = writeln!(out, "{k:<4} {name:<10} {cv:>14.6} {truth:>14} {flag:>6}");
        }
        if let Some(v) = self.optimal_risk {
            let _ = writeln!(out, "optimal_risk   {v:.6}");
        }
        if let Some(v) = self.sl_true_risk {
            let _ = writeln!(out, "sl_true_risk   {v:.6}");
        }
        if let Some(v) = self.sl_wrss {
            let _ = writeln!(out, "sl_wrss        {v:.6}");
        }
        for note in &self.notes {
            let _ = writeln!(out, "# {note}");
        }
        out
    }
}

/// Cross-validated risks recomputed from the level-one matrix, plus the selection.
pub fn cv_risk_report(level_one: &LevelOneData) -> RiskReport {
    let n = level_one.targets.len();
    let k = level_one.predictions.ncols();
    let mut risks = vec![0.0; k];
    for (j, risk) in risks.iter_mut().enumerate() {
        let mut sum = 0.0;
        for i in 0..n {
            let r = level_one.targets[i] - level_one.predictions[(i, j)];
            sum += r * r;
        }
        *risk = sum / n as f64;
    }
    RiskReport {
        selected: argmin(&risks),
        per_candidate_cv_risk: risks,
        per_candidate_true_risk: None,
        per_candidate_true_risk_stderr: None,
        optimal_risk: None,
        optimal_risk_stderr: None,
        oracle: None,
        sl_true_risk: None,
        sl_wrss: None,
        notes: Vec::new(),
    }
}

/// Fresh draws from the simulator with their restricted latent outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSample {
    pub x: DMatrix<f64>,
    /// `min(T*, tau)`.
    pub restricted: Vec<f64>,
    /// True conditional RMST at each row.
    pub optimal: Vec<f64>,
    pub tau: f64,
}

impl LatentSample {
    /// Draws `m` rows from stream `stream` of `sim.seed`.
    pub fn draw(sim: &SimConfig, tau: f64, m: usize, stream: u64) -> Result<Self> {
        sim.validate()?;
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::BadTau(tau));
        }
        if m == 0 {
            return Err(Error::EmptyData);
        }
        let mut rng = stream_rng(sim.seed, stream);
        let (zs, ts) = sim.sample_latent(m, &mut rng);
        let d = sim.scheme.dim();
        let x = DMatrix::from_fn(m, d, |i, j| zs[i][j]);
        let optimal = zs
            .iter()
            .map(|z| Ok(true_rmst_eta(sim, sim.linear_predictor(z)?, tau)))
            .collect::<Result<Vec<_>>>()?;
        let restricted = ts.iter().map(|t| t.min(tau)).collect();
        Ok(Self { x, restricted, optimal, tau })
    }

    pub fn len(&self) -> usize {
        self.restricted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.restricted.is_empty()
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Squared-error risk of `predictions` against the latent outcome, with its MC standard error.
pub fn prediction_risk(sample: &LatentSample, predictions: &[f64]) -> Result<(f64, f64)> {
    if predictions.len() != sample.len() {
        return Err(Error::DimensionMismatch { expected: sample.len(), got: predictions.len() });
    }
    let losses: Vec<f64> =
        sample.restricted.iter().zip(predictions).map(|(y, p)| (y - p) * (y - p)).collect();
    Ok(mean_and_stderr(&losses))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueRisks {
    /// Rotation-averaged latent risk per candidate.
    pub per_candidate: Vec<f64>,
    /// Standard error of each candidate's paired excess over the optimum.
    pub excess_stderr: Vec<f64>,
    pub optimal: f64,
    pub optimal_stderr: f64,
}

/// Latent risk of each candidate, averaged over the fold rotations that trained it.
///
/// With `clamp_tau` set, candidate predictions are clamped to `[0, tau]`.
pub fn true_conditional_risk(
    fold_models: &[Vec<FittedModel>],
    sample: &LatentSample,
    clamp_tau: Option<f64>,
) -> Result<TrueRisks> {
    if fold_models.is_empty() || fold_models[0].is_empty() {
        return Err(Error::InvalidArgument("no fitted fold models".into()));
    }
    let k = fold_models[0].len();
    let m = sample.len();
    let optimal_loss: Vec<f64> =
        sample.restricted.iter().zip(&sample.optimal).map(|(y, p)| (y - p) * (y - p)).collect();
    let (optimal, optimal_stderr) = mean_and_stderr(&optimal_loss);

    let mut per_candidate = Vec::with_capacity(k);
    let mut excess_stderr = Vec::with_capacity(k);
    for j in 0..k {
        let mut loss = vec![0.0; m];
        for models in fold_models {
            let model = models.get(j).ok_or(Error::DimensionMismatch { expected: k, got: models.len() })?;
            let preds = match clamp_tau {
                Some(tau) => model.predict_clamped(&sample.x, tau)?,
                None => model.predict(&sample.x)?,
            };
            for i in 0..m {
                let r = sample.restricted[i] - preds[i];
                loss[i] += r * r;
            }
        }
        let rotations = fold_models.len() as f64;
        for l in &mut loss {
            *l /= rotations;
        }
        let excess: Vec<f64> = loss.iter().zip(&optimal_loss).map(|(a, b)| a - b).collect();
        per_candidate.push(mean_and_stderr(&loss).0);
        excess_stderr.push(mean_and_stderr(&excess).1);
    }
    Ok(TrueRisks { per_candidate, excess_stderr, optimal, optimal_stderr })
}

/// Completes the report of a fitted super learner using the simulator.
///
/// Latent risks are measured on `test_n` fresh rows from stream `stream`;
/// the IPCW estimate uses a censored sample of the same size from `stream + 1`.
pub fn simulated_risk_report(
    fit: &SuperLearnerFit,
    sim: &SimConfig,
    test_n: usize,
    stream: u64,
) -> Result<RiskReport> {
    let tau = fit.model.tau;
    let clamp_tau = fit.model.clamp_predictions.then_some(tau);
    let sample = LatentSample::draw(sim, tau, test_n, stream)?;
    let truth = true_conditional_risk(&fit.cv.fold_models, &sample, clamp_tau)?;
    let sl_preds = fit.model.predict(&sample.x)?;
    let (sl_true_risk, _) = prediction_risk(&sample, &sl_preds)?;

    let censored = simulate_stream(&SimConfig { n: test_n, ..sim.clone() }, stream + 1)?.observed;
    let sl_wrss = if censored.max_time().is_some_and(|t| t >= tau) {
        let preds = fit.model.predict(&censored.design_matrix())?;
        Some(wrss(&censored, &preds, tau)?)
    } else {
        None
    };

    let mut report = cv_risk_report(&fit.cv.level_one);
    report.oracle = Some(argmin(&truth.per_candidate));
    report.per_candidate_true_risk = Some(truth.per_candidate);
    report.per_candidate_true_risk_stderr = Some(truth.excess_stderr);
    report.optimal_risk = Some(truth.optimal);
    report.optimal_risk_stderr = Some(truth.optimal_stderr);
    report.sl_true_risk = Some(sl_true_risk);
    report.sl_wrss = sl_wrss;
    report.notes.push(WRSS_FORMULA.to_string());
    Ok(report)
}

/// Inverse-probability-of-censoring weighted residual sum of squares.
///
/// See [`WRSS_FORMULA`] for the weights.
pub fn wrss(data: &Dataset, predictions: &[f64], tau: f64) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if predictions.len() != data.len() {
        return Err(Error::DimensionMismatch { expected: data.len(), got: predictions.len() });
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::BadTau(tau));
    }
    let max_time = data.max_time().unwrap_or(0.0);
    if tau > max_time {
        return Err(Error::TauOutOfRange { tau, max_time });
    }
    if predictions.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("wrss predictions"));
    }
    let flipped = data.flipped();
    let censor_curve = if flipped.n_events() > 0 { Some(km_fit(&flipped)?) } else { None };
    let mut sum = 0.0;
    for (i, (row, pred)) in data.rows().iter().zip(predictions).enumerate() {
        if !(row.event || row.time >= tau) {
            continue;
        }
        let t = row.time.min(tau);
        let g = censor_curve.as_ref().map_or(1.0, |c| c.survival_before(t));
        if g <= 0.0 {
            return Err(Error::ZeroCensorWeight { index: i });
        }
        let r = t - pred;
        sum += r * r / g;
    }
    Ok(sum / data.len() as f64)
}

/// Plain mean squared error of `predictions` against `min(t_i, tau)`.
pub fn restricted_mse(data: &Dataset, predictions: &[f64], tau: f64) -> Result<f64> {
    if predictions.len() != data.len() {
        return Err(Error::DimensionMismatch { expected: data.len(), got: predictions.len() });
    }
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let sum: f64 = data.rows().iter().zip(predictions).map(|(r, p)| (r.time.min(tau) - p).powi(2)).sum();
    Ok(sum / data.len() as f64)
}

/// Constants of the finite-sample oracle bound for loss bound `m` and trade-off `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub m: f64,
    pub gamma: f64,
    pub m1: f64,
    pub m2: f64,
    pub c: f64,
}

impl BoundConstants {
    pub fn new(m: f64, gamma: f64) -> Self {
        let m1 = 8.0 * m * m;
        let m2 = 16.0 * m * m;
        let c = 2.0 * (1.0 + gamma).powi(2) * (m1 / 3.0 + m2 / gamma);
        Self { m, gamma, m1, m2, c }
    }

    /// `2 c (1 + ln K) / (n p)`.
    pub fn penalty(&self, k: usize, n_p: f64) -> f64 {
        2.0 * self.c * (1.0 + (k as f64).ln()) / n_p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub sim: SimConfig,
    pub library: Vec<LearnerSpec>,
    pub folds: usize,
    pub gamma: f64,
    /// Bound on pseudo-values and predictions; defaults to `tau`.
    #[serde(default)]
    pub m: Option<f64>,
    /// Horizon; defaults to the pilot quantile of a 100000-row sample.
    #[serde(default)]
    pub tau: Option<f64>,
    pub replications: usize,
    pub test_n: usize,
    pub seed: u64,
    pub clamp: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReplication {
    pub replication: usize,
    pub selected: usize,
    pub oracle: usize,
    pub cv_risks: Vec<f64>,
    pub true_risks: Vec<f64>,
    pub excess_stderr: Vec<f64>,
    pub optimal_risk: f64,
    pub optimal_stderr: f64,
    /// `true_risks[oracle] <= true_risks[selected]`.
    pub dominance: bool,
    /// Every candidate's risk is at least the optimum minus two paired standard errors.
    pub optimum_floor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundAudit {
    pub gamma: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "M1")]
    pub m1: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    pub c: f64,
    pub tau: f64,
    pub n: usize,
    pub k: usize,
    pub folds: usize,
    /// Validation-fold size used in the penalty, `n / V`.
    pub n_p: f64,
    pub penalty: f64,
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub rhs_stderr: f64,
    /// Mean of `lhs_r - rhs_r` over replications and its standard error.
    pub gap: f64,
    pub gap_stderr: f64,
    /// `gap > 2 * gap_stderr`.
    pub violation: bool,
    pub dominance_rate: f64,
    pub optimum_floor_rate: f64,
    pub replications: usize,
    pub note: String,
    pub rows: Vec<AuditReplication>,
}

impl BoundAudit {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.note);
        let _ = writeln!(
            out,
            "gamma {}  M {:.6}  M1 {:.6}  M2 {:.6}  c {:.6}  tau {:.6}",
            self.gamma, self.m, self.m1, self.m2, self.c, self.tau
        );
        let _ = writeln!(out, "n {}  K {}  V {}  n_p {:.3}  penalty {:.6}", self.n, self.k, self.folds, self.n_p, self.penalty);
        let _ = writeln!(out, "lhs {:.6} (se {:.6})  rhs {:.6} (se {:.6})", self.lhs, self.lhs_stderr, self.rhs, self.rhs_stderr);
        let _ = writeln!(
            out,
            "violation {}  dominance_rate {:.3}  optimum_floor_rate {:.3}",
            self.violation, self.dominance_rate, self.optimum_floor_rate
        );
        let _ = writeln!(out, "{:>5} {:>4} {:>4} {:>12} {:>12} {:>12}", "rep", "sel", "orc", "risk_sel", "risk_orc", "optimal");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>5} {:>4} {:>4} {:>12.6} {:>12.6} {:>12.6}",
                r.replication, r.selected, r.oracle, r.true_risks[r.selected], r.true_risks[r.oracle], r.optimal_risk
            );
        }
        out
    }
}

const PILOT_SIZE: usize = 100_000;

/// Horizon from a large pilot sample on a stream no replication uses.
pub fn pilot_tau(sim: &SimConfig) -> Result<f64> {
    let pilot = simulate_stream(&SimConfig { n: PILOT_SIZE, ..sim.clone() }, u64::MAX)?;
    select_tau(&pilot.observed, sim.tau_quantile)
}

/// Monte Carlo audit of the oracle inequality for the split-pseudo-value selector.
///
/// Replication `r` trains on stream `2r` and measures latent risks on stream
/// `2r + 1` of `config.seed`, with folds seeded by `config.seed + r`.
pub fn audit_oracle_inequality(config: &AuditConfig) -> Result<BoundAudit> {
    if !config.clamp {
        return Err(Error::ClampRequired);
    }
    if config.replications < 10 {
        return Err(Error::InvalidArgument(format!(
            "audit needs at least 10 replications, got {}",
            config.replications
        )));
    }
    if !(config.gamma.is_finite() && config.gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {}", config.gamma)));
    }
    let sim = SimConfig { seed: config.seed, ..config.sim.clone() };
    sim.validate()?;
    let tau = match config.tau {
        Some(t) if t.is_finite() && t > 0.0 => t,
        Some(t) => return Err(Error::BadTau(t)),
        None => pilot_tau(&sim)?,
    };
    let m = config.m.unwrap_or(tau);
    if !(m.is_finite() && m >= tau) {
        return Err(Error::InvalidArgument(format!("M must be at least tau = {tau}, got {m}")));
    }
    let clamp = Some(ClampMode { bound: m });
    let k = config.library.len();

    let rows = (0..config.replications)
        .into_par_iter()
        .map(|r| -> Result<AuditReplication> {
            let data = simulate_stream(&sim, 2 * r as u64)?.observed;
            let folds = make_folds(data.len(), config.folds, config.seed.wrapping_add(r as u64))?;
            let cv = cross_validate(&data, &config.library, &folds, tau, Algorithm::SplitPobs, clamp)?;
            let sample = LatentSample::draw(&sim, tau, config.test_n, 2 * r as u64 + 1)?;
            let truth = true_conditional_risk(&cv.fold_models, &sample, Some(tau))?;
            let selected = argmin(&cv.level_one.cv_risks);
            let oracle = argmin(&truth.per_candidate);
            let optimum_floor = truth
                .per_candidate
                .iter()
                .zip(&truth.excess_stderr)
                .all(|(risk, se)| *risk >= truth.optimal - 2.0 * se);
            Ok(AuditReplication {
                replication: r,
                selected,
                oracle,
                dominance: truth.per_candidate[oracle] <= truth.per_candidate[selected],
                optimum_floor,
                cv_risks: cv.level_one.cv_risks,
                true_risks: truth.per_candidate,
                excess_stderr: truth.excess_stderr,
                optimal_risk: truth.optimal,
                optimal_stderr: truth.optimal_stderr,
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let constants = BoundConstants::new(m, config.gamma);
    let n_p = sim.n as f64 / config.folds as f64;
    let penalty = constants.penalty(k, n_p);
    let scale = 1.0 + 2.0 * config.gamma;
    let lhs_r: Vec<f64> = rows.iter().map(|r| r.true_risks[r.selected] - r.optimal_risk).collect();
    let rhs_r: Vec<f64> =
        rows.iter().map(|r| scale * (r.true_risks[r.oracle] - r.optimal_risk) + penalty).collect();
    let gap_r: Vec<f64> = lhs_r.iter().zip(&rhs_r).map(|(l, r)| l - r).collect();
    let (lhs, lhs_stderr) = mean_and_stderr(&lhs_r);
    let (rhs, rhs_stderr) = mean_and_stderr(&rhs_r);
    let (gap, gap_stderr) = mean_and_stderr(&gap_r);
    let reps = rows.len() as f64;
    Ok(BoundAudit {
        gamma: config.gamma,
        m,
        m1: constants.m1,
        m2: constants.m2,
        c: constants.c,
        tau,
        n: sim.n,
        k,
        folds: config.folds,
        n_p,
        penalty,
        lhs,
        lhs_stderr,
        rhs,
        rhs_stderr,
        gap,
        gap_stderr,
        violation: gap > 2.0 * gap_stderr,
        dominance_rate: rows.iter().filter(|r| r.dominance).count() as f64 / reps,
        optimum_floor_rate: rows.iter().filter(|r| r.optimum_floor).count() as f64 / reps,
        replications: rows.len(),
        note: AUDIT_NOTE.to_string(),
        rows,
    })
}

/// Summary of standard-versus-split pseudo-value agreement at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementSummary {
    pub n: usize,
    pub rho: f64,
    pub tau: f64,
    pub median_abs_diff: f64,
    pub mean_abs_diff: f64,
    pub pairs: usize,
    /// Replications skipped because a KM sample had no events.
    pub skipped: usize,
}

/// Compares standard pseudo-values on the full sample with split pseudo-values
/// for a random `rho` share of it, using the rest as the KM sample.
pub fn pobs_agreement(sim: &SimConfig, rho: f64, tau: f64, replications: usize) -> Result<AgreementSummary> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1), got {rho}")));
    }
    let n2 = ((rho * sim.n as f64).round() as usize).clamp(1, sim.n.saturating_sub(1).max(1));
    let opts = PobsOptions { clamp: None, extend_beyond_data: true };
    let per_rep = (0..replications)
        .into_par_iter()
        .map(|r| -> Result<Option<Vec<f64>>> {
            let data = simulate_stream(sim, r as u64)?.observed;
            let mut order: Vec<usize> = (0..data.len()).collect();
            order.shuffle(&mut stream_rng(sim.seed ^ 0x5eed, r as u64));
            let (eval, km) = order.split_at(n2);
            let km_set = data.subset(km);
            if km_set.n_events() == 0 {
                return Ok(None);
            }
            let standard = match standard_pobs_with(&data, tau, &opts) {
                Ok(s) => s.values,
                Err(Error::DegenerateJackknife { .. } | Error::AllCensored) => return Ok(None),
                Err(e) => return Err(e),
            };
            let split = split_pobs_with(&km_set, &data.subset(eval), tau, &opts)?.values;
            Ok(Some(eval.iter().zip(&split).map(|(&i, s)| (standard[i] - s).abs()).collect()))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let skipped = per_rep.iter().filter(|r| r.is_none()).count();
    let mut diffs: Vec<f64> = per_rep.into_iter().flatten().flatten().collect();
    if diffs.is_empty() {
        return Err(Error::AllCensored);
    }
    diffs.sort_by(f64::total_cmp);
    let len = diffs.len();
    let median = if len % 2 == 1 { diffs[len / 2] } else { 0.5 * (diffs[len / 2 - 1] + diffs[len / 2]) };
    Ok(AgreementSummary {
        n: sim.n,
        rho,
        tau,
        median_abs_diff: median,
        mean_abs_diff: diffs.iter().sum::<f64>() / len as f64,
        pairs: len,
        skipped,
    })
}
