//! Shared fixtures for the benchmarks.

use rmst_sl::{simulate, Dataset, LearnerKind, LearnerSpec, Scheme, SimConfig};

/// Scheme-1 sample of size `n` with its selected horizon.
pub fn scheme_one(n: usize) -> (Dataset, f64) {
    let sim = simulate(&SimConfig::scheme(Scheme::One, n, 2024)).expect("valid scheme");
    (sim.observed, sim.tau)
}

/// Splits a dataset into alternating KM and evaluation halves.
pub fn halves(data: &Dataset) -> (Dataset, Dataset) {
    let even: Vec<usize> = (0..data.len()).step_by(2).collect();
    let odd: Vec<usize> = (1..data.len()).step_by(2).collect();
    (data.subset(&even), data.subset(&odd))
}

pub fn library() -> Vec<LearnerSpec> {
    vec![
        LearnerSpec::new(LearnerKind::Ols),
        LearnerSpec::new(LearnerKind::Lasso),
        LearnerSpec::new(LearnerKind::Knn),
        LearnerSpec::new(LearnerKind::Tree),
        LearnerSpec::new(LearnerKind::Forest).with("n_trees", 50.0),
    ]
}
