use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// k-nearest-neighbour regression on standardized Euclidean distance.
///
/// Distance ties are broken by training-row order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Standardized training rows, row-major.
    pub points: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl KnnModel {
    pub(super) fn fit(x: &DMatrix<f64>, y: &[f64], k: usize) -> Self {
        let n = x.nrows() as f64;
        let (means, scales): (Vec<f64>, Vec<f64>) = x
            .column_iter()
            .map(|col| {
                let m = col.sum() / n;
                let sd = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
                (m, if sd > 0.0 { sd } else { 1.0 })
            })
            .unzip();
        let points = (0..x.nrows())
            .map(|i| (0..x.ncols()).map(|j| (x[(i, j)] - means[j]) / scales[j]).collect())
            .collect();
        Self { k: k.min(x.nrows()), means, scales, points, targets: y.to_vec() }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(self.points.len());
        (0..x.nrows())
            .map(|i| {
                let q: Vec<f64> = (0..x.ncols())
                    .map(|j| (x[(i, j)] - self.means[j]) / self.scales[j])
                    .collect();
                order.clear();
                order.extend(self.points.iter().enumerate().map(|(r, p)| {
                    let dist: f64 = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
                    (dist, r)
                }));
                let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                if self.k < order.len() {
                    order.select_nth_unstable_by(self.k - 1, cmp);
                }
                let mut nearest: Vec<usize> = order[..self.k].iter().map(|p| p.1).collect();
                nearest.sort_unstable();
                nearest.iter().map(|&r| self.targets[r]).sum::<f64>() / self.k as f64
            })
            .collect()
    }
}
