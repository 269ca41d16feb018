//! Lawson-Hanson active-set non-negative least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Simplex weights for the continuous super learner: the NNLS solution of
/// `min |y - P w|` over `w >= 0`, rescaled to sum to one. An all-zero
/// solution falls back to uniform weights.
pub fn nnls(p: &DMatrix<f64>, y: &[f64]) -> Result<Vec<f64>> {
    let w = nnls_unnormalized(p, y)?;
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        Ok(w.iter().map(|v| v / total).collect())
    } else {
        Ok(vec![1.0 / w.len() as f64; w.len()])
    }
}

/// Raw NNLS solution before the sum-to-one rescaling.
///
/// Among equally good columns the lowest index enters the passive set first,
/// so degenerate optima resolve towards earlier columns.
pub fn nnls_unnormalized(p: &DMatrix<f64>, y: &[f64]) -> Result<Vec<f64>> {
    let (n, k) = p.shape();
    if n == 0 || k == 0 {
        return Err(Error::EmptyData);
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if p.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("nnls input"));
    }
    let y = DVector::from_column_slice(y);
    let scale = (p.transpose() * &y).amax().max(p.amax() * p.amax()).max(1.0);
    let tol = 1e-12 * scale * (n.max(k) as f64);

    let mut x = DVector::<f64>::zeros(k);
    let mut passive = vec![false; k];
    let gradient = |x: &DVector<f64>| p.transpose() * (&y - p * x);

    for _ in 0..(3 * k + 10) {
        let w = gradient(&x);
        let entering = (0..k)
            .filter(|&j| !passive[j] && w[j] > tol)
            .fold(None, |best: Option<usize>, j| match best {
                Some(b) if w[b] >= w[j] => Some(b),
                _ => Some(j),
            });
        let Some(t) = entering else { break };
        passive[t] = true;

        // inner loop: keep the passive-set solution feasible
        for _ in 0..(3 * k + 10) {
            let cols: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
            let z = solve_passive(p, &y, &cols);
            if cols.iter().zip(z.iter()).all(|(_, &v)| v > 0.0) {
                x.fill(0.0);
                for (&j, &v) in cols.iter().zip(z.iter()) {
                    x[j] = v;
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (&j, &v) in cols.iter().zip(z.iter()) {
                if v <= 0.0 {
                    let denom = x[j] - v;
                    if denom > 0.0 {
                        alpha = alpha.min(x[j] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            let alpha = if alpha.is_finite() { alpha } else { 0.0 };
            let mut candidate = DVector::<f64>::zeros(k);
            for (&j, &v) in cols.iter().zip(z.iter()) {
                candidate[j] = v;
            }
            for &j in &cols {
                x[j] += alpha * (candidate[j] - x[j]);
                if x[j] <= tol.min(1e-14) {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if !passive.iter().any(|&b| b) {
                break;
            }
        }
    }
    Ok(x.iter().map(|v| v.max(0.0)).collect())
}

fn solve_passive(p: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize]) -> DVector<f64> {
    let sub = p.select_columns(cols);
    let svd = sub.svd(true, true);
    let eps = svd.singular_values.max() * (p.nrows().max(cols.len()) as f64) * f64::EPSILON;
    svd.solve(y, eps).unwrap_or_else(|_| DVector::zeros(cols.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kkt_violation(p: &DMatrix<f64>, y: &[f64], w: &[f64]) -> f64 {
        let yv = DVector::from_column_slice(y);
        let wv = DVector::from_column_slice(w);
        let grad = p.transpose() * (yv - p * wv);
        grad.iter()
            .zip(w)
            .map(|(g, &x)| if x > 0.0 { g.abs() } else { g.max(0.0) })
            .fold(0.0, f64::max)
    }

    #[test]
    fn single_perfect_column() {
        let p = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        assert_eq!(nnls(&p, &[1.0, 2.0, 3.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn negatively_correlated_column_excluded() {
        let p = DMatrix::from_column_slice(2, 2, &[1.0, 2.0, -1.0, -2.0]);
        let w = nnls(&p, &[1.0, 2.0]).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12);
        assert_eq!(w[1], 0.0);
    }

    #[test]
    fn identical_columns_favour_first() {
        let p = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 4.0, 1.0, 2.0, 4.0]);
        let w = nnls(&p, &[1.5, 2.0, 3.0]).unwrap();
        assert_eq!(w, vec![1.0, 0.0]);
    }

    #[test]
    fn all_zero_falls_back_to_uniform() {
        let p = DMatrix::from_column_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        assert_eq!(nnls(&p, &[-1.0, -1.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn rejects_non_finite() {
        let p = DMatrix::from_column_slice(1, 1, &[f64::NAN]);
        assert!(matches!(nnls(&p, &[1.0]), Err(Error::NonFinite(_))));
    }

    proptest! {
        #[test]
        fn kkt_and_simplex(
            entries in prop::collection::vec(-3.0f64..3.0, 40),
            y in prop::collection::vec(-3.0f64..3.0, 10),
        ) {
            let p = DMatrix::from_column_slice(10, 4, &entries);
            let raw = nnls_unnormalized(&p, &y).unwrap();
            prop_assert!(raw.iter().all(|&v| v >= 0.0));
            prop_assert!(kkt_violation(&p, &y, &raw) <= 1e-6);
            let w = nnls(&p, &y).unwrap();
            prop_assert!(w.iter().all(|&v| v >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            // every vertex is feasible, so the raw optimum is at least as good
            let yv = DVector::from_column_slice(&y);
            let obj = (&yv - &p * DVector::from_column_slice(&raw)).norm_squared();
            for j in 0..4 {
                let col = p.column(j);
                let c = (col.dot(&yv) / col.norm_squared().max(1e-300)).max(0.0);
                prop_assert!(obj <= (&yv - col * c).norm_squared() + 1e-8);
            }
        }
    }
}
