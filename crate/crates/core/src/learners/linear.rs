use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Intercept plus coefficients on the original feature scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| {
                self.intercept
                    + self.coefficients.iter().enumerate().map(|(j, b)| b * x[(i, j)]).sum::<f64>()
            })
            .collect()
    }
}

/// Least squares with intercept through an SVD of `[1 | X]`.
///
/// Rank-deficient designs get the minimum-norm solution when `pinv` is set.
pub(super) fn fit_ols(x: &DMatrix<f64>, y: &DVector<f64>, pinv: bool) -> Result<LinearModel> {
    let (n, d) = x.shape();
    let design = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
    let svd = design.svd(true, true);
    let largest = svd.singular_values.max();
    let eps = largest * (n.max(d + 1) as f64) * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    if rank < d + 1 {
        if !pinv {
            return Err(Error::SingularDesign);
        }
        log::warn!("OLS design has rank {rank} < {}; using the minimum-norm solution", d + 1);
    }
    let beta = svd.solve(y, eps).map_err(|_| Error::SingularDesign)?;
    Ok(LinearModel { intercept: beta[0], coefficients: beta.iter().skip(1).copied().collect() })
}

/// Column means and population standard deviations; constant columns get scale 0.
struct Standardizer {
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl Standardizer {
    fn new(x: &DMatrix<f64>) -> Self {
        let n = x.nrows() as f64;
        let mut means = Vec::with_capacity(x.ncols());
        let mut scales = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            means.push(m);
            scales.push(if var > 1e-24 * (1.0 + m * m) { var.sqrt() } else { 0.0 });
        }
        Self { means, scales }
    }

    fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            if self.scales[j] > 0.0 {
                (x[(i, j)] - self.means[j]) / self.scales[j]
            } else {
                0.0
            }
        })
    }

    fn to_original(&self, y_mean: f64, beta: &[f64]) -> LinearModel {
        let coefficients: Vec<f64> = beta
            .iter()
            .zip(&self.scales)
            .map(|(b, s)| if *s > 0.0 { b / s } else { 0.0 })
            .collect();
        let shift: f64 = coefficients.iter().zip(&self.means).map(|(c, m)| c * m).sum();
        LinearModel { intercept: y_mean - shift, coefficients }
    }
}

/// Ridge on standardized features: `(Xs'Xs + n lambda I) b = Xs'(y - mean(y))`.
pub(super) fn fit_ridge(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> LinearModel {
    let n = x.nrows() as f64;
    let std = Standardizer::new(x);
    let xs = std.transform(x);
    let y_mean = y.mean();
    let yc = y.add_scalar(-y_mean);
    let mut gram = xs.transpose() * &xs;
    for j in 0..gram.nrows() {
        // constant columns are all-zero after standardization
        let ridge = if std.scales[j] > 0.0 { n * lambda } else { 1.0 };
        gram[(j, j)] += ridge;
    }
    let rhs = xs.transpose() * yc;
    let beta = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        // lambda = 0 with collinear columns
        None => gram.svd(true, true).solve(&rhs, 1e-12).unwrap_or_else(|_| DVector::zeros(rhs.len())),
    };
    std.to_original(y_mean, beta.as_slice())
}

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Cyclic coordinate descent for
/// `(1 / 2n) |y - mean(y) - Xs b|^2 + lambda |b|_1` on standardized features.
///
/// Returns the model and the objective after each full sweep.
pub(super) fn fit_lasso(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> (LinearModel, Vec<f64>) {
    let n = x.nrows() as f64;
    let d = x.ncols();
    let std = Standardizer::new(x);
    let xs = std.transform(x);
    let y_mean = y.mean();
    let mut residual = y.add_scalar(-y_mean);
    let mut beta = vec![0.0; d];
    let objective = |r: &DVector<f64>, b: &[f64]| {
        r.norm_squared() / (2.0 * n) + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
    };
    let mut trace = Vec::new();
    for _ in 0..max_iter {
        let mut max_step: f64 = 0.0;
        for j in 0..d {
            if std.scales[j] == 0.0 {
                continue;
            }
            let col = xs.column(j);
            // standardized columns have (1/n) |x_j|^2 = 1
            let rho = col.dot(&residual) / n + beta[j];
            let updated = soft_threshold(rho, lambda);
            let step = updated - beta[j];
            if step != 0.0 {
                residual.axpy(-step, &col, 1.0);
                beta[j] = updated;
                max_step = max_step.max(step.abs());
            }
        }
        trace.push(objective(&residual, &beta));
        if max_step <= tol {
            break;
        }
    }
    (std.to_original(y_mean, &beta), trace)
}

/// Largest violation of the lasso optimality conditions for a model fitted by
/// [`fit_lasso`] (measured on the standardized problem).
pub fn lasso_kkt_residual(x: &DMatrix<f64>, y: &[f64], lambda: f64, model: &LinearModel) -> f64 {
    let n = x.nrows() as f64;
    let std = Standardizer::new(x);
    let xs = std.transform(x);
    let y_mean = y.iter().sum::<f64>() / n;
    let beta: Vec<f64> = model.coefficients.iter().zip(&std.scales).map(|(c, s)| c * s).collect();
    let fitted = &xs * DVector::from_column_slice(&beta);
    let residual = DVector::from_fn(y.len(), |i, _| y[i] - y_mean - fitted[i]);
    let mut worst: f64 = 0.0;
    for j in 0..x.ncols() {
        if std.scales[j] == 0.0 {
            continue;
        }
        let grad = xs.column(j).dot(&residual) / n;
        let violation = if beta[j] != 0.0 {
            (grad - lambda * beta[j].signum()).abs()
        } else {
            (grad.abs() - lambda).max(0.0)
        };
        worst = worst.max(violation);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn correlated(n: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, 4, |_, _| rng.random_range(-2.0..2.0));
        let x = DMatrix::from_fn(n, 4, |i, j| if j == 3 { x[(i, 0)] * 0.8 + x[(i, 3)] * 0.2 } else { x[(i, j)] });
        let y = DVector::from_fn(n, |i, _| 1.5 * x[(i, 0)] - x[(i, 2)] + 0.3 + rng.random_range(-0.3..0.3));
        (x, y)
    }

    #[test]
    fn lasso_one_dimensional_soft_threshold() {
        let x = DMatrix::from_column_slice(2, 1, &[1.0, -1.0]);
        let y = DVector::from_column_slice(&[1.0, -1.0]);
        let (m, _) = fit_lasso(&x, &y, 0.3, 1000, 1e-14);
        assert!((m.coefficients[0] - 0.7).abs() < 1e-12);
        assert!(m.intercept.abs() < 1e-12);
        let (m, _) = fit_lasso(&x, &y, 1.5, 1000, 1e-14);
        assert_eq!(m.coefficients[0], 0.0);
    }

    #[test]
    fn lasso_without_penalty_is_ols() {
        let (x, y) = correlated(60, 4);
        let (lasso, _) = fit_lasso(&x, &y, 0.0, 100_000, 1e-14);
        let ols = fit_ols(&x, &y, false).unwrap();
        for (a, b) in lasso.coefficients.iter().zip(&ols.coefficients) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!((lasso.intercept - ols.intercept).abs() < 1e-8);
    }

    #[test]
    fn lasso_objective_monotone_and_kkt() {
        let (x, y) = correlated(80, 11);
        for lambda in [0.01, 0.1, 0.5, 2.0] {
            let (m, trace) = fit_lasso(&x, &y, lambda, 10_000, 1e-12);
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-14);
            }
            assert!(lasso_kkt_residual(&x, y.as_slice(), lambda, &m) <= 1e-6);
        }
    }

    #[test]
    fn ols_rank_deficiency() {
        let x = DMatrix::from_fn(6, 2, |i, _| i as f64);
        let y = DVector::from_fn(6, |i, _| 3.0 * i as f64 + 1.0);
        assert_eq!(fit_ols(&x, &y, false), Err(Error::SingularDesign));
        let m = fit_ols(&x, &y, true).unwrap();
        // minimum norm splits the slope evenly between the duplicate columns
        assert!((m.coefficients[0] - m.coefficients[1]).abs() < 1e-8);
        for (p, t) in m.predict(&x).iter().zip(y.iter()) {
            assert!((p - t).abs() < 1e-8);
        }
    }

    #[test]
    fn ridge_shrinks_towards_zero() {
        let (x, y) = correlated(50, 2);
        let small = fit_ridge(&x, &y, 1e-10);
        let ols = fit_ols(&x, &y, false).unwrap();
        for (a, b) in small.coefficients.iter().zip(&ols.coefficients) {
            assert!((a - b).abs() < 1e-6);
        }
        let big = fit_ridge(&x, &y, 1e6);
        assert!(big.coefficients.iter().all(|c| c.abs() < 1e-4));
        assert!((big.intercept - y.mean()).abs() < 1e-3);
    }

    #[test]
    fn constant_columns_are_ignored() {
        let x = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 4.0 } else { i as f64 });
        let y = DVector::from_fn(5, |i, _| 2.0 * i as f64);
        let (m, _) = fit_lasso(&x, &y, 0.0, 1000, 1e-14);
        assert_eq!(m.coefficients[0], 0.0);
        assert!((m.coefficients[1] - 2.0).abs() < 1e-10);
        let r = fit_ridge(&x, &y, 0.0);
        assert!((r.coefficients[1] - 2.0).abs() < 1e-10);
    }
}
