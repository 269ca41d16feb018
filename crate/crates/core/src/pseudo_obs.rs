//! Jackknife pseudo-observations of the restricted mean survival time.
//!
//! Standard pseudo-values use leave-one-out refits on the whole sample:
//! `n * rmst(S) - (n - 1) * rmst(S without i)`.
//! Split pseudo-values add one held-out subject to a separate KM sample:
//! `(n1 + 1) * rmst(S with i) - n1 * rmst(S)`.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::survival::{km_fit, RiskTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PobsKind {
    Standard,
    Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoObservationSet {
    pub values: Vec<f64>,
    pub tau: f64,
    pub kind: PobsKind,
    /// Size of the KM sample for split pseudo-values, 0 for standard ones.
    pub km_set_size: usize,
}

/// Knobs shared by both pseudo-value kinds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PobsOptions {
    /// Clamp every value to `[lo, hi]` after computation.
    pub clamp: Option<(f64, f64)>,
    /// Accept `tau` beyond the largest KM-sample time; curves are then held constant.
    pub extend_beyond_data: bool,
}

impl PobsOptions {
    fn finish(&self, mut values: Vec<f64>) -> Vec<f64> {
        if let Some((lo, hi)) = self.clamp {
            for v in &mut values {
                *v = v.clamp(lo, hi);
            }
        }
        values
    }
}

fn check_tau(tau: f64, max_time: f64, opts: &PobsOptions) -> Result<()> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::BadTau(tau));
    }
    if tau > max_time && !opts.extend_beyond_data {
        return Err(Error::TauOutOfRange { tau, max_time });
    }
    Ok(())
}

fn check_standard(data: &Dataset, tau: f64, opts: &PobsOptions) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    match data.n_events() {
        0 => return Err(Error::AllCensored),
        1 => {
            // removing the single event leaves an undefined leave-one-out estimate
            let index = data.rows().iter().position(|r| r.event).unwrap_or(0);
            return Err(Error::DegenerateJackknife { index });
        }
        _ => {}
    }
    check_tau(tau, data.max_time().unwrap_or(0.0), opts)
}

/// `n * big - (n - 1) * small`, formed before rounding.
fn jackknife(n: f64, big: Dd, small: Dd) -> f64 {
    (Dd::new(n) * big - Dd::new(n - 1.0) * small).value()
}

/// Standard pseudo-observations with default options.
pub fn standard_pobs(data: &Dataset, tau: f64) -> Result<PseudoObservationSet> {
    standard_pobs_with(data, tau, &PobsOptions::default())
}

/// Standard pseudo-observations in one sorted pass.
///
/// For a subject in time group `g`, removing it lowers the risk set of every
/// group up to `g` by one (and the death count of `g` if it was an event).
/// Prefix products of the reduced factors and suffix sums of the unchanged
/// ones give every leave-one-out integral in `O(n log n)` total.
pub fn standard_pobs_with(
    data: &Dataset,
    tau: f64,
    opts: &PobsOptions,
) -> Result<PseudoObservationSet> {
    check_standard(data, tau, opts)?;
    let n = data.len();
    let table = RiskTable::from_pairs(data.rows().iter().map(|r| (r.time, r.event)));
    let m = table.times.len();

    let width = |k: usize| -> Dd {
        let start = table.times[k];
        if start >= tau {
            return Dd::ZERO;
        }
        let end = table.times.get(k + 1).map_or(tau, |&t| t.min(tau));
        Dd::diff(end, start)
    };
    let head = Dd::new(table.times[0].min(tau));

    // prefix[g] = head + sum_{k<g} width(k) * reduced[k], reduced[k] = prod_{j<=k} a_j
    let mut prefix = vec![Dd::ZERO; m + 1];
    let mut reduced = vec![Dd::ONE; m + 1]; // reduced[g] = prod_{j<g} a_j
    prefix[0] = head;
    for k in 0..m {
        let (d, r) = (table.events[k], table.at_risk[k]);
        let a = if r > 1 { Dd::survival_factor(d, r - 1) } else { Dd::ONE };
        reduced[k + 1] = reduced[k] * a;
        prefix[k + 1] = prefix[k] + width(k) * reduced[k + 1];
    }

    // suffix[g] = sum_{k>=g} width(k) * prod_{g<j<=k} b_j
    let mut suffix = vec![Dd::ZERO; m + 1];
    for k in (0..m).rev() {
        let next = if k + 1 < m {
            Dd::survival_factor(table.events[k + 1], table.at_risk[k + 1]) * suffix[k + 1]
        } else {
            Dd::ZERO
        };
        suffix[k] = width(k) + next;
    }

    let full = table.rmst_dd(tau);
    let values = data
        .rows()
        .iter()
        .map(|row| {
            let g = table.times.partition_point(|&s| s < row.time);
            let r = table.at_risk[g];
            let d = table.events[g] - row.event as usize;
            let own = if r > 1 { Dd::survival_factor(d, r - 1) } else { Dd::ONE };
            let loo = prefix[g] + reduced[g] * own * suffix[g];
            jackknife(n as f64, full, loo)
        })
        .collect();

    Ok(PseudoObservationSet {
        values: opts.finish(values),
        tau,
        kind: PobsKind::Standard,
        km_set_size: 0,
    })
}

/// Reference implementation: `n` literal leave-one-out Kaplan-Meier refits.
pub fn standard_pobs_naive(data: &Dataset, tau: f64) -> Result<PseudoObservationSet> {
    standard_pobs_naive_with(data, tau, &PobsOptions::default())
}

pub fn standard_pobs_naive_with(
    data: &Dataset,
    tau: f64,
    opts: &PobsOptions,
) -> Result<PseudoObservationSet> {
    check_standard(data, tau, opts)?;
    let n = data.len();
    let full = km_fit(data)?.rmst(tau);
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let loo = match km_fit(&data.subset(&keep)) {
            Ok(curve) => curve.rmst(tau),
            Err(_) => return Err(Error::DegenerateJackknife { index: i }),
        };
        values.push(n as f64 * full - (n - 1) as f64 * loo);
    }
    Ok(PseudoObservationSet {
        values: opts.finish(values),
        tau,
        kind: PobsKind::Standard,
        km_set_size: 0,
    })
}

/// Split pseudo-observations with default options.
pub fn split_pobs(km_set: &Dataset, eval_set: &Dataset, tau: f64) -> Result<PseudoObservationSet> {
    split_pobs_with(km_set, eval_set, tau, &PobsOptions::default())
}

/// Split pseudo-observations: one add-one refit of the KM sample per evaluated row.
///
/// The KM sample is sorted once; each refit merges one subject into the
/// sorted risk table in linear time.
pub fn split_pobs_with(
    km_set: &Dataset,
    eval_set: &Dataset,
    tau: f64,
    opts: &PobsOptions,
) -> Result<PseudoObservationSet> {
    if km_set.is_empty() {
        return Err(Error::EmptyData);
    }
    if km_set.n_events() == 0 {
        return Err(Error::AllCensored);
    }
    if km_set.dim() != eval_set.dim() {
        return Err(Error::DimensionMismatch { expected: km_set.dim(), got: eval_set.dim() });
    }
    check_tau(tau, km_set.max_time().unwrap_or(0.0), opts)?;

    let n1 = km_set.len() as f64;
    let table = RiskTable::from_pairs(km_set.rows().iter().map(|r| (r.time, r.event)));
    let base = table.rmst_dd(tau);
    let values = eval_set
        .rows()
        .iter()
        .map(|row| jackknife(n1 + 1.0, table.with_added(row.time, row.event).rmst_dd(tau), base))
        .collect();
    Ok(PseudoObservationSet {
        values: opts.finish(values),
        tau,
        kind: PobsKind::Split,
        km_set_size: km_set.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Observation;
    use proptest::prelude::*;

    fn hand_data() -> Dataset {
        Dataset::from_times(&[1.0, 2.0, 3.0], &[true, false, true]).unwrap()
    }

    /// Add-one refit done literally with `km_fit` on the concatenated sample.
    fn split_oracle(km: &Dataset, eval: &Dataset, tau: f64) -> Vec<f64> {
        let n1 = km.len() as f64;
        let base = km_fit(km).unwrap().rmst(tau);
        eval.rows()
            .iter()
            .map(|row| {
                let mut rows = km.rows().to_vec();
                rows.push(row.clone());
                let plus = km_fit(&Dataset::new(rows).unwrap()).unwrap().rmst(tau);
                (n1 + 1.0) * plus - n1 * base
            })
            .collect()
    }

    #[test]
    fn uncensored_identity_small() {
        let data = Dataset::from_times(&[1.0, 2.0, 3.0], &[true; 3]).unwrap();
        let p = standard_pobs(&data, 2.5).unwrap();
        for (v, e) in p.values.iter().zip([1.0, 2.0, 2.5]) {
            assert!((v - e).abs() < 1e-12);
        }
        let two = Dataset::from_times(&[1.0, 3.0], &[true; 2]).unwrap();
        let naive = standard_pobs_naive(&two, 2.0).unwrap();
        assert!((naive.values[0] - 1.0).abs() < 1e-12);
        assert!((naive.values[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hand_censored_example() {
        // full rmst(3) = 7/3; without row 0: {(2,0),(3,1)} -> rmst 3
        // without row 1: {(1,1),(3,1)} -> 1 + 2 * 0.5 = 2; without row 2: {(1,1),(2,0)} -> 1 + 2 * 0.5 = 2
        let expected = [3.0 * 7.0 / 3.0 - 2.0 * 3.0, 7.0 - 4.0, 7.0 - 4.0];
        let fast = standard_pobs(&hand_data(), 3.0).unwrap();
        let naive = standard_pobs_naive(&hand_data(), 3.0).unwrap();
        for i in 0..3 {
            assert!((fast.values[i] - expected[i]).abs() < 1e-12);
            assert!((naive.values[i] - expected[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicated_uncensored_identity() {
        let times = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        let data = Dataset::from_times(&times, &[true; 6]).unwrap();
        let p = standard_pobs(&data, 2.5).unwrap();
        for (v, t) in p.values.iter().zip(times) {
            assert!((v - t.min(2.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn split_examples() {
        let km = Dataset::from_times(&[1.0, 2.0], &[true; 2]).unwrap();
        let eval = Dataset::from_times(&[1.5], &[true]).unwrap();
        let p = split_pobs(&km, &eval, 2.0).unwrap();
        assert!((p.values[0] - 1.5).abs() < 1e-12);
        assert_eq!(p.km_set_size, 2);

        let eval = Dataset::from_times(&[3.0, 4.0], &[true; 2]).unwrap();
        let km = Dataset::from_times(&[2.0, 5.0], &[true; 2]).unwrap();
        let p = split_pobs(&km, &eval, 1.5).unwrap();
        assert!(p.values.iter().all(|v| (v - 1.5).abs() < 1e-12));
    }

    #[test]
    fn split_hand_censored() {
        // 4-point refit {(1,1),(2,0),(2.5,1),(3,1)}: S = 3/4 on [1,2.5), 3/8 on [2.5,3)
        // rmst(3) = 1 + 1.5 * 3/4 + 0.5 * 3/8 = 2.3125; base = 7/3
        let eval = Dataset::from_times(&[2.5], &[true]).unwrap();
        let p = split_pobs(&hand_data(), &eval, 3.0).unwrap();
        let expected = 4.0 * 2.3125 - 3.0 * 7.0 / 3.0;
        assert!((p.values[0] - expected).abs() < 1e-12);
        assert!((p.values[0] - split_oracle(&hand_data(), &eval, 3.0)[0]).abs() < 1e-12);
    }

    #[test]
    fn error_paths() {
        assert_eq!(standard_pobs(&Dataset::default(), 1.0), Err(Error::EmptyData));
        let censored = Dataset::from_times(&[1.0, 2.0], &[false; 2]).unwrap();
        assert_eq!(standard_pobs(&censored, 1.0), Err(Error::AllCensored));
        assert_eq!(
            standard_pobs(&hand_data(), 4.0),
            Err(Error::TauOutOfRange { tau: 4.0, max_time: 3.0 })
        );
        let single_event = Dataset::from_times(&[1.0, 2.0, 3.0], &[false, true, false]).unwrap();
        assert_eq!(
            standard_pobs(&single_event, 2.0),
            Err(Error::DegenerateJackknife { index: 1 })
        );
        assert_eq!(
            standard_pobs_naive(&single_event, 2.0),
            Err(Error::DegenerateJackknife { index: 1 })
        );
        assert!(matches!(split_pobs(&censored, &hand_data(), 1.0), Err(Error::AllCensored)));
        assert!(matches!(
            split_pobs(&hand_data(), &hand_data(), 3.5),
            Err(Error::TauOutOfRange { .. })
        ));
        let with_cov = Dataset::new(vec![Observation::new(1.0, true, vec![0.0])]).unwrap();
        assert!(matches!(
            split_pobs(&hand_data(), &with_cov, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn extension_and_clamp() {
        let opts = PobsOptions { clamp: None, extend_beyond_data: true };
        let fast = standard_pobs_with(&hand_data(), 4.0, &opts).unwrap();
        let naive = standard_pobs_naive_with(&hand_data(), 4.0, &opts).unwrap();
        for (a, b) in fast.values.iter().zip(&naive.values) {
            assert!((a - b).abs() < 1e-12);
        }
        let clamped = PobsOptions { clamp: Some((0.0, 2.0)), extend_beyond_data: false };
        let p = standard_pobs_with(&hand_data(), 3.0, &clamped).unwrap();
        assert!(p.values.iter().all(|v| (0.0..=2.0).contains(v)));
    }

    fn censored_sample(max_n: usize) -> impl Strategy<Value = Vec<(f64, bool)>> {
        prop::collection::vec(((1u32..60).prop_map(|t| t as f64 / 6.0), prop::bool::weighted(0.6)), 2..max_n)
            .prop_filter("needs two events", |v| v.iter().filter(|p| p.1).count() >= 2)
    }

    proptest! {
        #[test]
        fn fast_matches_naive(sample in censored_sample(60), q in 0.1f64..1.0) {
            let (times, events): (Vec<f64>, Vec<bool>) = sample.into_iter().unzip();
            let data = Dataset::from_times(&times, &events).unwrap();
            let tau = q * data.max_time().unwrap();
            let fast = standard_pobs(&data, tau).unwrap();
            let naive = standard_pobs_naive(&data, tau).unwrap();
            for (a, b) in fast.values.iter().zip(&naive.values) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn permutation_equivariant(sample in censored_sample(40), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let (times, events): (Vec<f64>, Vec<bool>) = sample.into_iter().unzip();
            let data = Dataset::from_times(&times, &events).unwrap();
            let tau = data.max_time().unwrap() * 0.8;
            let mut perm: Vec<usize> = (0..data.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let base = standard_pobs(&data, tau).unwrap();
            let permuted = standard_pobs(&data.subset(&perm), tau).unwrap();
            for (k, &i) in perm.iter().enumerate() {
                prop_assert!((permuted.values[k] - base.values[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn split_matches_refit(km in censored_sample(30), eval in censored_sample(10), q in 0.1f64..1.0) {
            let (kt, ke): (Vec<f64>, Vec<bool>) = km.into_iter().unzip();
            let (et, ee): (Vec<f64>, Vec<bool>) = eval.into_iter().unzip();
            let km = Dataset::from_times(&kt, &ke).unwrap();
            let eval = Dataset::from_times(&et, &ee).unwrap();
            let tau = q * km.max_time().unwrap();
            let fast = split_pobs(&km, &eval, tau).unwrap();
            for (a, b) in fast.values.iter().zip(split_oracle(&km, &eval, tau)) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
