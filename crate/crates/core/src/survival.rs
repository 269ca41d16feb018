//! Product-limit (Kaplan-Meier) estimation and restricted-mean integration.
//!
//! At a shared time, events are processed before censorings: a subject censored
//! at `t` is still at risk for the events at `t`. Beyond the largest observed
//! time a curve is held at its last value.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dd::Dd;
use crate::error::{Error, Result};

/// Right-continuous step survival function.
///
/// Equal to 1 on `[0, jump_times[0])` and to `values[k]` on
/// `[jump_times[k], jump_times[k + 1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    jump_times: Vec<f64>,
    values: Vec<f64>,
}

impl SurvivalCurve {
    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Right-continuous evaluation `S(t)`.
    pub fn survival_at(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// Left limit `S(t-)`.
    pub fn survival_before(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s < t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// Exact integral of the step function over `[0, tau]`.
    pub fn rmst(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        let mut total = 0.0;
        let mut left = 0.0;
        let mut level = 1.0;
        for (&t, &v) in self.jump_times.iter().zip(&self.values) {
            if t >= tau {
                break;
            }
            total += level * (t - left);
            left = t;
            level = v;
        }
        total + level * (tau - left)
    }
}

/// Free-function form of [`SurvivalCurve::survival_at`].
pub fn survival_at(curve: &SurvivalCurve, t: f64) -> f64 {
    curve.survival_at(t)
}

/// Free-function form of [`SurvivalCurve::rmst`].
pub fn rmst(curve: &SurvivalCurve, tau: f64) -> f64 {
    curve.rmst(tau)
}

/// Kaplan-Meier estimate of the event-time survival function.
pub fn km_fit(data: &Dataset) -> Result<SurvivalCurve> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if data.n_events() == 0 {
        return Err(Error::AllCensored);
    }
    let table = RiskTable::from_pairs(data.rows().iter().map(|r| (r.time, r.event)));
    Ok(table.curve())
}

/// Distinct observed times with event and at-risk counts.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RiskTable {
    pub times: Vec<f64>,
    pub events: Vec<usize>,
    pub at_risk: Vec<usize>,
}

impl RiskTable {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, bool)>) -> Self {
        let mut sorted: Vec<(f64, bool)> = pairs.into_iter().collect();
        // events first within a tie
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        let mut times = Vec::new();
        let mut events = Vec::new();
        let mut counts = Vec::new();
        for (t, e) in sorted {
            if times.last() != Some(&t) {
                times.push(t);
                events.push(0);
                counts.push(0);
            }
            let k = times.len() - 1;
            counts[k] += 1;
            if e {
                events[k] += 1;
            }
        }
        let mut at_risk = vec![0; times.len()];
        let mut remaining = 0;
        for k in (0..times.len()).rev() {
            remaining += counts[k];
            at_risk[k] = remaining;
        }
        Self { times, events, at_risk }
    }

    /// Inserts one extra subject, keeping the table sorted. Linear in the table size.
    pub fn with_added(&self, time: f64, event: bool) -> Self {
        let pos = self.times.partition_point(|&s| s < time);
        let mut out = self.clone();
        for r in &mut out.at_risk[..pos] {
            *r += 1;
        }
        if pos < out.times.len() && out.times[pos] == time {
            out.at_risk[pos] += 1;
            out.events[pos] += event as usize;
        } else {
            let later = out.at_risk.get(pos).copied().unwrap_or(0);
            out.times.insert(pos, time);
            out.events.insert(pos, event as usize);
            out.at_risk.insert(pos, later + 1);
        }
        out
    }

    pub fn curve(&self) -> SurvivalCurve {
        let mut jump_times = Vec::new();
        let mut values = Vec::new();
        let mut s = 1.0;
        for k in 0..self.times.len() {
            if self.events[k] > 0 {
                s *= 1.0 - self.events[k] as f64 / self.at_risk[k] as f64;
                jump_times.push(self.times[k]);
                values.push(s);
            }
        }
        SurvivalCurve { jump_times, values }
    }

    /// Restricted mean of the product-limit curve, without building the curve.
    pub(crate) fn rmst_dd(&self, tau: f64) -> Dd {
        let mut total = Dd::ZERO;
        let mut left = 0.0;
        let mut level = Dd::ONE;
        for k in 0..self.times.len() {
            let t = self.times[k];
            if t >= tau {
                break;
            }
            total = total + level * Dd::diff(t, left);
            left = t;
            if self.events[k] > 0 {
                level = level * Dd::survival_factor(self.events[k], self.at_risk[k]);
            }
        }
        total + level * Dd::diff(tau, left)
    }
}
