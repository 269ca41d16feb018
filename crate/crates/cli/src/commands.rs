use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rmst_sl::evaluation::{simulated_risk_report, WRSS_FORMULA};
use rmst_sl::simulation::stream_rng;
use rmst_sl::super_learner::{fit_super_learner_detailed, ClampMode};
use rmst_sl::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{dataset_csv, read_covariates, read_dataset, read_json, write_json, write_text};

fn required<'a>(value: &'a Option<PathBuf>, name: &str) -> CliResult<&'a Path> {
    value.as_deref().ok_or_else(|| CliError::Usage(format!("`{name}` is required (config key or --{name})")))
}

fn resolve_tau(config: &RunConfig, data: &Dataset) -> CliResult<f64> {
    match config.tau {
        Some(tau) => Ok(tau),
        None => Ok(select_tau(data, config.tau_quantile)?),
    }
}

fn clamp_mode(config: &RunConfig, tau: f64) -> Option<ClampMode> {
    config.clamp.then_some(ClampMode { bound: tau })
}

fn sl_config(config: &RunConfig, tau: f64) -> SuperLearnerConfig {
    SuperLearnerConfig {
        library: config.library.clone(),
        folds: config.folds,
        tau,
        mode: config.mode,
        algorithm: config.algorithm,
        seed: config.seed,
        clamp: clamp_mode(config, tau),
    }
}

#[derive(Serialize)]
struct SimulationSidecar<'a> {
    config: &'a SimConfig,
    tau: f64,
    censoring_fraction: f64,
    latent_event_times: &'a [f64],
    latent_censor_times: &'a [f64],
}

pub fn simulate_cmd(config: &RunConfig, out: &Path) -> CliResult<()> {
    let sim = simulate(&config.simulation)?;
    let n = sim.observed.len();
    write_text(&out.join("simulated.csv"), &dataset_csv(&sim.observed))?;
    write_json(
        &out.join("simulated.json"),
        &SimulationSidecar {
            config: &config.simulation,
            tau: sim.tau,
            censoring_fraction: (n - sim.observed.n_events()) as f64 / n as f64,
            latent_event_times: &sim.latent_event_times,
            latent_censor_times: &sim.latent_censor_times,
        },
    )?;
    log::info!("simulated {n} rows, tau = {}", sim.tau);
    Ok(())
}

pub fn pobs_cmd(config: &RunConfig, out: &Path) -> CliResult<()> {
    let data = read_dataset(required(&config.input, "input")?)?;
    let tau = resolve_tau(config, &data)?;
    let opts = PobsOptions { clamp: config.clamp.then_some((-tau, tau)), extend_beyond_data: false };
    let mut text = String::new();
    let (rows, values) = match config.pobs.kind {
        PobsKind::Standard => {
            let _ = writeln!(text, "# kind=standard tau={tau}");
            ((0..data.len()).collect::<Vec<_>>(), standard_pobs_with(&data, tau, &opts)?.values)
        }
        PobsKind::Split => {
            let n = data.len();
            if n < 2 {
                return Err(Error::EmptyData.into());
            }
            let n2 = ((config.pobs.split_ratio * n as f64).round() as usize).clamp(1, n - 1);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut stream_rng(config.seed, 0));
            let mut eval = order[..n2].to_vec();
            let mut km = order[n2..].to_vec();
            eval.sort_unstable();
            km.sort_unstable();
            let values = split_pobs_with(&data.subset(&km), &data.subset(&eval), tau, &opts)?.values;
            let _ = writeln!(text, "# kind=split tau={tau} n1={}", km.len());
            (eval, values)
        }
    };
    text.push_str("index,time,event,gamma\n");
    for (&i, gamma) in rows.iter().zip(&values) {
        let row = &data.rows()[i];
        let _ = writeln!(text, "{i},{},{},{gamma}", row.time, u8::from(row.event));
    }
    write_text(&out.join("pobs.csv"), &text)
}

pub fn fit_cmd(config: &RunConfig, out: &Path) -> CliResult<()> {
    let data = read_dataset(required(&config.input, "input")?)?;
    let tau = resolve_tau(config, &data)?;
    let model = fit_super_learner(&data, &sl_config(config, tau))?;
    write_json(&out.join("model.json"), &model)
}

pub fn predict_cmd(config: &RunConfig, out: &Path) -> CliResult<()> {
    let model: SuperLearnerModel = read_json(required(&config.model, "model")?)?;
    let x = read_covariates(required(&config.input, "input")?)?;
    let predictions = sl_predict(&model, &x)?;
    let mut text = String::from("index,prediction\n");
    for (i, p) in predictions.iter().enumerate() {
        let _ = writeln!(text, "{i},{p}");
    }
    write_text(&out.join("predictions.csv"), &text)
}

/// With an input dataset, scores a fitted model by IPCW on it; otherwise fits
/// on simulated data and measures latent risks on a fresh simulated sample.
pub fn evaluate_cmd(config: &RunConfig, out: &Path) -> CliResult<()> {
    let (report, library) = match &config.input {
        Some(input) => {
            let model: SuperLearnerModel = read_json(required(&config.model, "model")?)?;
            let data = read_dataset(input)?;
            let predictions = sl_predict(&model, &data.design_matrix())?;
            let risks = model.cv_risks.clone();
            let selected = (0..risks.len()).fold(0, |best, k| if risks[k] < risks[best] { k } else { best });
            let report = RiskReport {
                per_candidate_cv_risk: risks,
                selected,
                per_candidate_true_risk: None,
                per_candidate_true_risk_stderr: None,
                optimal_risk: None,
                optimal_risk_stderr: None,
                oracle: None,
                sl_true_risk: None,
                sl_wrss: Some(wrss(&data, &predictions, model.tau)?),
                notes: vec![WRSS_FORMULA.to_string()],
            };
            (report, model.library)
        }
        None => {
            let train = rmst_sl::simulation::simulate_stream(&config.simulation, 0)?;
            let tau = config.tau.unwrap_or(train.tau);
            let fit = fit_super_learner_detailed(&train.observed, &sl_config(config, tau))?;
            let report = simulated_risk_report(&fit, &config.simulation, config.evaluate.test_n, 1)?;
            write_json(&out.join("model.json"), &fit.model)?;
            (report, fit.model.library)
        }
    };
    write_json(&out.join("report.json"), &report)?;
    write_text(&out.join("report.txt"), &report.to_table(&library))
}

pub fn audit_cmd(config: &RunConfig, out: &Path) -> CliResult<()> {
    let audit = audit_oracle_inequality(&AuditConfig {
        sim: config.simulation.clone(),
        library: config.library.clone(),
        folds: config.folds,
        gamma: config.audit.gamma,
        m: config.audit.m,
        tau: config.tau,
        replications: config.audit.replications,
        test_n: config.audit.test_n,
        seed: config.seed,
        clamp: config.clamp,
    })?;
    log::info!("audit lhs {} rhs {} violation {}", audit.lhs, audit.rhs, audit.violation);
    write_json(&out.join("audit.json"), &audit)?;
    write_text(&out.join("audit.txt"), &audit.to_table())
}

#[derive(Serialize)]
struct BenchCheck {
    n: usize,
    tau: f64,
    max_abs_fast_vs_naive: f64,
    rmst: f64,
}

#[derive(Serialize)]
struct BenchReport {
    operations: Vec<&'static str>,
    checks: Vec<BenchCheck>,
}

fn median_seconds(repeats: usize, mut f: impl FnMut() -> CliResult<()>) -> CliResult<f64> {
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        f()?;
        times.push(start.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    Ok(times[times.len() / 2])
}

/// Times the core operations. Wall-clock timings go to stdout only; the
/// written artifact holds the accuracy checks, which are deterministic.
pub fn bench_cmd(config: &RunConfig, out: &Path) -> CliResult<()> {
    let operations = vec!["km_fit", "standard_pobs", "standard_pobs_naive", "split_pobs", "fit_super_learner"];
    let mut checks = Vec::new();
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{:>7} {:<20} {:>14}", "n", "operation", "median_s");
    for &n in &config.bench.sizes {
        let sim = simulate(&SimConfig { n, ..config.simulation.clone() })?;
        let (data, tau) = (&sim.observed, sim.tau);
        let half: Vec<usize> = (0..n).filter(|i| i % 2 == 0).collect();
        let rest: Vec<usize> = (0..n).filter(|i| i % 2 == 1).collect();
        let (km_set, eval_set) = (data.subset(&half), data.subset(&rest));
        let split_tau = tau.min(km_set.max_time().unwrap_or(0.0));
        let reps = config.bench.repeats;
        let timings = [
            ("km_fit", median_seconds(reps, || km_fit(data).map(drop).map_err(Into::into))?),
            ("standard_pobs", median_seconds(reps, || standard_pobs(data, tau).map(drop).map_err(Into::into))?),
            ("standard_pobs_naive", median_seconds(1, || standard_pobs_naive(data, tau).map(drop).map_err(Into::into))?),
            ("split_pobs", median_seconds(reps, || split_pobs(&km_set, &eval_set, split_tau).map(drop).map_err(Into::into))?),
            (
                "fit_super_learner",
                median_seconds(1, || fit_super_learner(data, &sl_config(config, tau)).map(drop).map_err(Into::into))?,
            ),
        ];
        for (op, secs) in timings {
            let _ = writeln!(stdout, "{n:>7} {op:<20} {secs:>14.6}");
        }
        let fast = standard_pobs(data, tau)?.values;
        let naive = standard_pobs_naive(data, tau)?.values;
        let max_abs = fast.iter().zip(&naive).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        checks.push(BenchCheck { n, tau, max_abs_fast_vs_naive: max_abs, rmst: rmst(&km_fit(data)?, tau) });
    }
    write_json(&out.join("bench.json"), &BenchReport { operations, checks })
}
