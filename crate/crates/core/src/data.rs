//! Right-censored observations and datasets.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One right-censored record: observed time, event flag and covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    /// `true` when the event was observed, `false` when censored.
    pub event: bool,
    pub covariates: Vec<f64>,
}

impl Observation {
    pub fn new(time: f64, event: bool, covariates: Vec<f64>) -> Self {
        Self { time, event, covariates }
    }
}

/// An ordered collection of observations sharing the covariate dimension `d`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    rows: Vec<Observation>,
    d: usize,
}

impl Dataset {
    /// Builds a dataset, checking time nonnegativity, finiteness and a common `d`.
    pub fn new(rows: Vec<Observation>) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.covariates.len());
        Self::with_dim(rows, d)
    }

    pub fn with_dim(rows: Vec<Observation>, d: usize) -> Result<Self> {
        for row in &rows {
            if !(row.time.is_finite() && row.time >= 0.0) {
                return Err(Error::NonFinite("observation time"));
            }
            if row.covariates.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: row.covariates.len() });
            }
            if row.covariates.iter().any(|z| !z.is_finite()) {
                return Err(Error::NonFinite("covariates"));
            }
        }
        Ok(Self { rows, d })
    }

    /// Covariate-free dataset from parallel time / event slices.
    pub fn from_times(times: &[f64], events: &[bool]) -> Result<Self> {
        if times.len() != events.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), got: events.len() });
        }
        let rows = times
            .iter()
            .zip(events)
            .map(|(&t, &e)| Observation::new(t, e, Vec::new()))
            .collect();
        Self::with_dim(rows, 0)
    }

    pub fn rows(&self) -> &[Observation] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.time).collect()
    }

    pub fn events(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.event).collect()
    }

    pub fn n_events(&self) -> usize {
        self.rows.iter().filter(|r| r.event).count()
    }

    pub fn max_time(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.time).reduce(f64::max)
    }

    /// Sub-dataset made of the given row indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            d: self.d,
        }
    }

    /// Covariates as an `n x d` matrix.
    pub fn design_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), self.d, |i, j| self.rows[i].covariates[j])
    }

    /// Copy of the dataset with the event flag flipped, for censoring-distribution estimates.
    pub fn flipped(&self) -> Dataset {
        Dataset {
            rows: self
                .rows
                .iter()
                .map(|r| Observation::new(r.time, !r.event, r.covariates.clone()))
                .collect(),
            d: self.d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mixed_dimensions() {
        let rows = vec![
            Observation::new(1.0, true, vec![0.0, 1.0]),
            Observation::new(2.0, false, vec![0.0]),
        ];
        assert_eq!(Dataset::new(rows), Err(Error::DimensionMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn rejects_negative_time() {
        assert!(Dataset::from_times(&[-1.0], &[true]).is_err());
    }

    #[test]
    fn design_matrix_layout() {
        let rows = vec![
            Observation::new(1.0, true, vec![1.0, 2.0]),
            Observation::new(2.0, false, vec![3.0, 4.0]),
        ];
        let x = Dataset::new(rows).unwrap().design_matrix();
        assert_eq!(x[(1, 0)], 3.0);
        assert_eq!(x[(0, 1)], 2.0);
    }
}
