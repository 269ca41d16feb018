use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rmst_sl::{sl_predict, Dataset, Observation, SuperLearnerModel};

struct Sandbox {
    dir: tempfile::TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let path = self.path(name);
        std::fs::write(&path, text).unwrap();
        path
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_rmst-sl"))
            .current_dir(self.dir.path())
            .env_remove("RMST_SL_OUT")
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> Output {
        let out = self.run(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.path(name)).unwrap()
    }
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// `(index, gamma)` rows of a pobs CSV.
fn gammas(text: &str) -> Vec<(usize, f64)> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("index"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect()
}

#[test]
fn simulate_is_seed_deterministic() {
    let sb = Sandbox::new();
    let config = sb.write("c.json", r#"{"simulation": {"n": 80}}"#);
    sb.ok(&["--config", s(&config), "--seed", "5", "--out", "a", "simulate"]);
    sb.ok(&["--config", s(&config), "--seed", "5", "--out", "b", "simulate"]);
    sb.ok(&["--config", s(&config), "--seed", "6", "--out", "c", "simulate"]);
    assert_eq!(sb.read("a/simulated.csv"), sb.read("b/simulated.csv"));
    assert_eq!(sb.read("a/simulated.json"), sb.read("b/simulated.json"));
    assert_ne!(sb.read("a/simulated.csv"), sb.read("c/simulated.csv"));
    assert_eq!(sb.read("a/simulated.csv").lines().count(), 81);
}

#[test]
fn second_scheme_has_fifteen_covariates() {
    let sb = Sandbox::new();
    let config = sb.write("c.json", r#"{"simulation": {"scheme": 2, "n": 30}}"#);
    sb.ok(&["--config", s(&config), "--out", ".", "simulate"]);
    let text = sb.read("simulated.csv");
    let header = text.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 17);
    assert!(header.ends_with(",z15"));
}

#[test]
fn invalid_configuration_exits_with_validation_code() {
    let sb = Sandbox::new();
    let config = sb.write("c.json", r#"{"simulation": {"scheme": 3}}"#);
    let out = sb.run(&["--config", s(&config), "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[cli.config_invalid]"));
    let config = sb.write("f.json", r#"{"folds": 1}"#);
    assert_eq!(sb.run(&["--config", s(&config), "simulate"]).status.code(), Some(2));
    assert_eq!(sb.run(&["simulate", "--bogus"]).status.code(), Some(2));
    assert_eq!(sb.run(&[]).status.code(), Some(2));
}

#[test]
fn uncensored_pseudo_values_are_restricted_times() {
    let sb = Sandbox::new();
    let times: [f64; 10] = [0.7, 1.2, 1.2, 2.5, 3.1, 4.0, 4.4, 5.0, 6.5, 8.0];
    let mut csv = String::from("time,event,z1\n");
    for (i, t) in times.iter().enumerate() {
        csv.push_str(&format!("{t},1,{i}\n"));
    }
    let data = sb.write("d.csv", &csv);
    let tau = 4.2;
    for (kind, dir) in [("standard", "std"), ("split", "spl")] {
        let config = sb.write(&format!("{kind}.json"), &format!(r#"{{"tau": {tau}, "pobs": {{"kind": "{kind}"}}}}"#));
        sb.ok(&["--config", s(&config), "--out", dir, "pobs", "--input", s(&data)]);
        let rows = gammas(&sb.read(&format!("{dir}/pobs.csv")));
        assert!(!rows.is_empty());
        for (i, gamma) in rows {
            assert!((gamma - times[i].min(tau)).abs() < 1e-12, "{kind} row {i}: {gamma}");
        }
    }
    assert!(sb.read("spl/pobs.csv").starts_with("# kind=split tau=4.2 n1=5"));
}

#[test]
fn missing_event_column_is_named() {
    let sb = Sandbox::new();
    let data = sb.write("d.csv", "time,z1\n1,2\n3,4\n");
    let out = sb.run(&["--config", s(&sb.write("c.json", r#"{"tau": 1}"#)), "pobs", "--input", s(&data)]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("cli.csv_missing_column") && stderr.contains("event"), "{stderr}");
}

#[test]
fn all_censored_input_is_a_data_error() {
    let sb = Sandbox::new();
    let data = sb.write("d.csv", "time,event,z1\n1,0,2\n3,0,4\n");
    let out = sb.run(&["--config", s(&sb.write("c.json", r#"{"tau": 1}"#)), "pobs", "--input", s(&data)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn predictions_match_library_call() {
    let sb = Sandbox::new();
    let config = sb.write("c.json", r#"{"simulation": {"n": 120}, "folds": 4}"#);
    sb.ok(&["--config", s(&config), "--out", ".", "simulate"]);
    sb.ok(&["--config", s(&config), "--out", ".", "fit", "--input", "simulated.csv"]);
    sb.ok(&["--config", s(&config), "--out", ".", "predict", "--model", "model.json", "--input", "simulated.csv"]);
    let model: SuperLearnerModel = serde_json::from_str(&sb.read("model.json")).unwrap();
    let rows: Vec<Observation> = sb
        .read("simulated.csv")
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            Observation::new(f[0], f[1] == 1.0, f[2..].to_vec())
        })
        .collect();
    let data = Dataset::new(rows).unwrap();
    let expected = sl_predict(&model, &data.design_matrix()).unwrap();
    let mut text = String::from("index,prediction\n");
    for (i, p) in expected.iter().enumerate() {
        text.push_str(&format!("{i},{p}\n"));
    }
    assert_eq!(sb.read("predictions.csv"), text);
}

#[test]
fn audit_reports_both_sides_of_the_bound() {
    let sb = Sandbox::new();
    let config = sb.write(
        "c.json",
        r#"{"simulation": {"n": 200}, "clamp": true, "audit": {"replications": 20, "test_n": 2000}}"#,
    );
    sb.ok(&["--config", s(&config), "--out", ".", "audit"]);
    let audit: serde_json::Value = serde_json::from_str(&sb.read("audit.json")).unwrap();
    for key in ["lhs", "rhs", "dominance_rate", "penalty", "gap"] {
        assert!(audit[key].is_number(), "{key}");
    }
    assert_eq!(audit["replications"], 20);
    assert!(audit["lhs"].as_f64().unwrap() <= audit["rhs"].as_f64().unwrap());
    let table = sb.read("audit.txt");
    assert!(table.contains("lhs") && table.contains("rhs"));
}

#[test]
fn audit_without_clamp_is_rejected() {
    let sb = Sandbox::new();
    let out = sb.run(&["--out", ".", "audit"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("clamp"));
}

#[test]
fn output_directory_precedence() {
    let sb = Sandbox::new();
    let config = sb.write("c.json", r#"{"simulation": {"n": 20}, "output_dir": "from_config"}"#);
    sb.ok(&["--config", s(&config), "simulate"]);
    assert!(sb.path("from_config/simulated.csv").exists());

    let env_dir = sb.path("from_env");
    let run_env = |extra: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_rmst-sl"))
            .current_dir(sb.dir.path())
            .env("RMST_SL_OUT", &env_dir)
            .args(["--config", s(&config)])
            .args(extra)
            .arg("simulate")
            .output()
            .unwrap();
        assert!(out.status.success());
    };
    run_env(&[]);
    assert!(env_dir.join("simulated.csv").exists());
    run_env(&["--out", "from_flag"]);
    assert!(sb.path("from_flag/simulated.csv").exists());
}

#[test]
fn print_config_shows_resolved_values() {
    let sb = Sandbox::new();
    let out = sb.ok(&["--seed", "42", "--print-config"]);
    let config: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(config["seed"], 42);
    assert_eq!(config["simulation"]["seed"], 42);
    assert_eq!(config["folds"], 6);
}
