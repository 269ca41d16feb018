//! CART regression trees on squared error, and bagged random forests.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(super) struct TreeSettings {
    /// 0 means unlimited.
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features examined per split; 0 or >= d means all of them, in order.
    pub mtry: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(super) struct ForestSettings {
    pub n_trees: usize,
    pub tree: TreeSettings,
    pub bootstrap: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf { value: f64 },
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// A tree stored as a flat node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub(super) fn fit(x: &DMatrix<f64>, y: &[f64], settings: &TreeSettings) -> Self {
        let rows: Vec<usize> = (0..x.nrows()).collect();
        // an RNG is only consulted when mtry < d
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Self::grow(x, y, rows, settings, &mut rng)
    }

    fn grow(
        x: &DMatrix<f64>,
        y: &[f64],
        rows: Vec<usize>,
        settings: &TreeSettings,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut builder = Builder { x, y, settings, rng, nodes: Vec::new() };
        builder.build(rows, 0);
        RegressionTree { nodes: builder.nodes }
    }

    pub fn predict_row(&self, x: &DMatrix<f64>, row: usize) -> f64 {
        let mut node = 0;
        loop {
            match self.nodes[node] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if x[(row, feature)] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct Builder<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    settings: &'a TreeSettings,
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<TreeNode>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_> {
    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let mean = rows.iter().map(|&r| self.y[r]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(TreeNode::Leaf { value: mean });

        let depth_ok = self.settings.max_depth == 0 || depth < self.settings.max_depth;
        let pure = rows.iter().all(|&r| self.y[r] == self.y[rows[0]]);
        if !depth_ok || pure || rows.len() < 2 * self.settings.min_leaf {
            return id;
        }
        let Some(best) = self.best_split(&rows) else { return id };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.x[(r, best.feature)] <= best.threshold);
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[id] = TreeNode::Split { feature: best.feature, threshold: best.threshold, left, right };
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x.ncols();
        let m = self.settings.mtry;
        if m == 0 || m >= d {
            (0..d).collect()
        } else {
            let mut chosen = sample(&mut *self.rng, d, m).into_vec();
            chosen.sort_unstable();
            chosen
        }
    }

    /// Maximizes `sum_L^2 / n_L + sum_R^2 / n_R`, i.e. minimizes the children's SSE.
    fn best_split(&mut self, rows: &[usize]) -> Option<BestSplit> {
        let n = rows.len();
        let total: f64 = rows.iter().map(|&r| self.y[r]).sum();
        let parent = total * total / n as f64;
        let min_leaf = self.settings.min_leaf.max(1);
        let mut best: Option<BestSplit> = None;
        let mut sorted = rows.to_vec();
        for feature in self.candidate_features() {
            let x = self.x;
            sorted.sort_by(|&a, &b| x[(a, feature)].total_cmp(&x[(b, feature)]).then(a.cmp(&b)));
            let mut left_sum = 0.0;
            for pos in 0..n - 1 {
                left_sum += self.y[sorted[pos]];
                let n_left = pos + 1;
                if n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let (lo, hi) = (x[(sorted[pos], feature)], x[(sorted[pos + 1], feature)]);
                if lo >= hi {
                    continue;
                }
                let right_sum = total - left_sum;
                let score = left_sum * left_sum / n_left as f64
                    + right_sum * right_sum / (n - n_left) as f64;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(BestSplit { feature, threshold, score });
                }
            }
        }
        best.filter(|b| b.score > parent + 1e-12 * parent.abs().max(f64::MIN_POSITIVE))
    }
}

/// Bagged regression trees with per-split feature subsampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<RegressionTree>,
}

impl Forest {
    /// Tree `t` draws from ChaCha8 seeded with `seed` on stream `t`, so the
    /// result does not depend on how trees are scheduled across threads.
    pub(super) fn fit(x: &DMatrix<f64>, y: &[f64], settings: &ForestSettings) -> Self {
        let n = x.nrows();
        let trees = (0..settings.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
                rng.set_stream(t as u64);
                let rows: Vec<usize> = if settings.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                RegressionTree::grow(x, y, rows, &settings.tree, &mut rng)
            })
            .collect();
        Forest { trees }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| {
                self.trees.iter().map(|t| t.predict_row(x, i)).sum::<f64>() / self.trees.len() as f64
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> (DMatrix<f64>, Vec<f64>) {
        let x = DMatrix::from_fn(40, 2, |i, j| if j == 0 { (i % 8) as f64 } else { (i / 8) as f64 });
        let y = (0..40).map(|i| if i % 8 < 4 { 1.0 } else { 5.0 } + 0.1 * (i / 8) as f64).collect();
        (x, y)
    }

    #[test]
    fn stump_finds_step() {
        let (x, y) = grid();
        let settings = TreeSettings { max_depth: 1, min_leaf: 1, mtry: 0 };
        let tree = RegressionTree::fit(&x, &y, &settings);
        match tree.nodes[0] {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 3.5);
            }
            _ => panic!("expected a split"),
        }
        assert_eq!(tree.depth(), 1);
    }

    #[test]
    fn full_depth_interpolates_distinct_points() {
        let (x, y) = grid();
        let tree = RegressionTree::fit(&x, &y, &TreeSettings { max_depth: 0, min_leaf: 1, mtry: 0 });
        for i in 0..40 {
            assert!((tree.predict_row(&x, i) - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn min_leaf_respected() {
        let (x, y) = grid();
        let tree = RegressionTree::fit(&x, &y, &TreeSettings { max_depth: 0, min_leaf: 7, mtry: 0 });
        let mut counts = vec![0usize; tree.nodes.len()];
        for i in 0..40 {
            let mut node = 0;
            while let TreeNode::Split { feature, threshold, left, right } = tree.nodes[node] {
                node = if x[(i, feature)] <= threshold { left } else { right };
            }
            counts[node] += 1;
        }
        for (c, node) in counts.iter().zip(&tree.nodes) {
            if matches!(node, TreeNode::Leaf { .. }) {
                assert!(*c >= 7);
            }
        }
    }

    #[test]
    fn single_unbagged_full_forest_is_a_tree() {
        let (x, y) = grid();
        let tree_settings = TreeSettings { max_depth: 0, min_leaf: 2, mtry: 2 };
        let tree = RegressionTree::fit(&x, &y, &tree_settings);
        let forest = Forest::fit(
            &x,
            &y,
            &ForestSettings { n_trees: 1, tree: tree_settings, bootstrap: false, seed: 99 },
        );
        assert_eq!(forest.trees[0], tree);
    }

    #[test]
    fn forest_is_seed_deterministic() {
        let (x, y) = grid();
        let settings = ForestSettings {
            n_trees: 16,
            tree: TreeSettings { max_depth: 0, min_leaf: 2, mtry: 1 },
            bootstrap: true,
            seed: 5,
        };
        let a = Forest::fit(&x, &y, &settings);
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| Forest::fit(&x, &y, &settings));
        assert_eq!(a, b);
        let c = Forest::fit(&x, &y, &ForestSettings { seed: 6, ..settings });
        assert_ne!(a, c);
    }
}
