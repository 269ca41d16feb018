use rmst_sl::evaluation::{prediction_risk, restricted_mse, BoundConstants};
use rmst_sl::learners::ModelParams;
use rmst_sl::super_learner::cross_validate;
use rmst_sl::*;

fn library() -> Vec<LearnerSpec> {
    vec![
        LearnerSpec::new(LearnerKind::Ols),
        LearnerSpec::new(LearnerKind::Lasso),
        LearnerSpec::new(LearnerKind::Knn),
        LearnerSpec::new(LearnerKind::Tree),
        LearnerSpec::new(LearnerKind::Forest).with("n_trees", 30.0),
    ]
}

fn constant(value: f64, d: usize) -> FittedModel {
    FittedModel { spec: LearnerSpec::new(LearnerKind::Mean), train_d: d, params: ModelParams::Constant { value } }
}

#[test]
fn zero_predictor_risk_matches_independent_mc() {
    let sim = SimConfig::scheme(Scheme::One, 10, 21);
    let tau = 3.6;
    let sample = LatentSample::draw(&sim, tau, 20_000, 0).unwrap();
    let risks = true_conditional_risk(&[vec![constant(0.0, 3)]], &sample, None).unwrap();
    let other = LatentSample::draw(&sim, tau, 20_000, 1).unwrap();
    let (direct, se) = prediction_risk(&other, &vec![0.0; other.len()]).unwrap();
    assert!((risks.per_candidate[0] - direct).abs() < 4.0 * se * 2f64.sqrt());
}

#[test]
fn optimal_predictor_attains_optimum() {
    let sim = SimConfig::scheme(Scheme::Two, 10, 4);
    let sample = LatentSample::draw(&sim, 2.8, 5_000, 0).unwrap();
    let (risk, _) = prediction_risk(&sample, &sample.optimal).unwrap();
    let truth = true_conditional_risk(&[vec![constant(1.0, 15)]], &sample, None).unwrap();
    assert_eq!(risk, truth.optimal);
    assert!(truth.per_candidate[0] >= truth.optimal);
}

#[test]
fn candidates_never_beat_the_optimum() {
    let sim = SimConfig::scheme(Scheme::One, 150, 3);
    for stream in 0..3 {
        let data = rmst_sl::simulation::simulate_stream(&sim, stream).unwrap();
        let folds = make_folds(data.observed.len(), 6, stream).unwrap();
        let cv = cross_validate(&data.observed, &library(), &folds, 3.6, Algorithm::SplitPobs, None).unwrap();
        let sample = LatentSample::draw(&sim, 3.6, 4_000, 100 + stream).unwrap();
        let truth = true_conditional_risk(&cv.fold_models, &sample, None).unwrap();
        for (risk, se) in truth.per_candidate.iter().zip(&truth.excess_stderr) {
            assert!(*risk >= truth.optimal - 2.0 * se);
        }
        let report = cv_risk_report(&cv.level_one);
        for (a, b) in report.per_candidate_cv_risk.iter().zip(&cv.level_one.cv_risks) {
            assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }
}

#[test]
fn audit_bound_holds_across_gamma() {
    for gamma in [0.5, 1.0, 2.0] {
        let config = AuditConfig {
            sim: SimConfig::scheme(Scheme::One, 120, 0),
            library: library(),
            folds: 6,
            gamma,
            m: None,
            tau: Some(3.6),
            replications: 10,
            test_n: 2_000,
            seed: 77,
            clamp: true,
        };
        let audit = audit_oracle_inequality(&config).unwrap();
        let constants = BoundConstants::new(3.6, gamma);
        assert_eq!(audit.c, constants.c);
        assert_eq!(audit.m1, 8.0 * 3.6 * 3.6);
        assert_eq!(audit.n_p, 20.0);
        assert_eq!(audit.dominance_rate, 1.0);
        assert!(!audit.violation);
        assert!(audit.lhs <= audit.rhs);
        assert_eq!(audit.rows.len(), 10);
        for row in &audit.rows {
            assert!(row.dominance);
            assert!(row.true_risks[row.oracle] <= row.true_risks[row.selected]);
        }
    }
}

#[test]
fn audit_is_deterministic() {
    let config = AuditConfig {
        sim: SimConfig::scheme(Scheme::One, 80, 0),
        library: library(),
        folds: 4,
        gamma: 1.0,
        m: Some(5.0),
        tau: Some(3.5),
        replications: 10,
        test_n: 500,
        seed: 3,
        clamp: true,
    };
    let a = serde_json::to_string(&audit_oracle_inequality(&config).unwrap()).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap()
        .install(|| serde_json::to_string(&audit_oracle_inequality(&config).unwrap()).unwrap());
    assert_eq!(a, b);
}

#[test]
fn wrss_collapses_on_uncensored_simulation() {
    let mut sim = simulate(&SimConfig::scheme(Scheme::One, 300, 12)).unwrap();
    let rows = sim
        .observed
        .rows()
        .iter()
        .zip(&sim.latent_event_times)
        .map(|(r, &t)| Observation::new(t, true, r.covariates.clone()))
        .collect();
    sim.observed = Dataset::new(rows).unwrap();
    let preds: Vec<f64> = (0..300).map(|i| (i % 7) as f64 * 0.5).collect();
    let a = wrss(&sim.observed, &preds, 3.0).unwrap();
    let b = restricted_mse(&sim.observed, &preds, 3.0).unwrap();
    assert!((a - b).abs() <= 1e-12);
}
