use std::process::{Command, Output};

use mpmab::harness::{
    csv_string, parse_csv, run_experiment, serialize_results, sidecar_path, ArmEntry, DistributionName,
    ExperimentConfig, CSV_HEADER,
};
use mpmab::policies::{PolicyKind, PolicySpec};

fn mpmab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpmab")).args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_scenario(
        "bernoulli9",
        2_000,
        4,
        9,
        [PolicyKind::Orchexplore, PolicyKind::Mpsesa, PolicyKind::KlucbKc]
            .into_iter()
            .map(PolicySpec::new)
            .collect(),
    );
    cfg.stride = Some(250);
    cfg
}

#[test]
fn csv_has_one_row_per_policy_and_logged_slot() {
    let res = run_experiment(&small_config()).unwrap();
    let csv = csv_string(&res);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 3 * 8);

    let rows = parse_csv(&csv).unwrap();
    for (row, (tr, i)) in rows
        .iter()
        .zip(res.traces.iter().flat_map(|tr| (0..tr.t.len()).map(move |i| (tr, i))))
    {
        assert_eq!(row.policy, tr.label);
        assert_eq!(row.t, tr.t[i]);
        assert_eq!(row.mean_regret.to_bits(), tr.mean_regret[i].to_bits());
        assert_eq!(row.std_regret.to_bits(), tr.std_regret[i].to_bits());
        assert_eq!(row.optimal_action_freq.to_bits(), tr.optimal_action_freq[i].to_bits());
    }
}

#[test]
fn saved_config_reproduces_traces() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.scenario = None;
    cfg.plays = Some(3);
    cfg.arms = vec![
        ArmEntry { mean: 0.8, capacity: 2, distribution: DistributionName::Bernoulli, variance: None },
        ArmEntry { mean: 0.5, capacity: 2, distribution: DistributionName::Bernoulli, variance: None },
        ArmEntry { mean: 0.3, capacity: 3, distribution: DistributionName::Bernoulli, variance: None },
    ];
    let path = dir.path().join("exp.toml");
    cfg.save(&path).unwrap();
    let loaded = ExperimentConfig::load(&path).unwrap();
    assert_eq!(loaded, cfg);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&loaded).unwrap();
    assert_eq!(a.traces, b.traces);
    assert_eq!(a.metadata.scenario_hash, b.metadata.scenario_hash);
}

#[test]
fn results_and_sidecar_written() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_experiment(&small_config()).unwrap();
    let csv = dir.path().join("nested").join("run.csv");
    let side = serialize_results(&res, &csv).unwrap();
    assert_eq!(side, sidecar_path(&csv));
    let rows = parse_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(rows.len(), 24);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&side).unwrap()).unwrap();
    assert_eq!(meta["metadata"]["seed"], 9);
    assert_eq!(meta["metadata"]["horizon"], 2_000);
    assert!(meta["metadata"]["scenario_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn serial_and_parallel_runs_agree() {
    let mut serial = small_config();
    serial.threads = Some(1);
    let mut parallel = small_config();
    parallel.threads = Some(4);
    let a = run_experiment(&serial).unwrap();
    let b = run_experiment(&parallel).unwrap();
    assert_eq!(csv_string(&a), csv_string(&b));
}

#[test]
fn cli_lists_scenarios() {
    let out = mpmab(&["scenarios"]);
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    let rows: Vec<&str> = stdout.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("bernoulli9\t9\t7\t5.7\t3"));
    assert!(rows[2].starts_with("bs20\t20\t18\t"));
}

#[test]
fn cli_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.csv");
    let out = mpmab(&[
        "run",
        "--scenario",
        "gaussian9",
        "--policies",
        "orchexplore,ts_kc",
        "--horizon",
        "500",
        "--reps",
        "2",
        "--stride",
        "100",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert_eq!(text(&out.stdout).lines().count(), 3);
    let rows = parse_csv(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(rows.len(), 10);
    assert!(sidecar_path(&out_path).exists());
}

#[test]
fn cli_config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    small_config().save(&path).unwrap();
    let out = mpmab(&["run", "--config", path.to_str().unwrap(), "--horizon", "300", "--gamma", "0.5"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert_eq!(text(&out.stdout).lines().count(), 4);
}

#[test]
fn cli_skips_oversized_flat_baseline() {
    let out = mpmab(&["run", "--scenario", "bs20", "--policies", "ucb_flat,optimal", "--horizon", "50", "--reps", "1"]);
    assert!(out.status.success());
    let stderr = text(&out.stderr);
    assert!(stderr.contains("warning: skipping ucb_flat"), "{stderr}");
    assert!(stderr.contains("17672631900"), "{stderr}");
    assert!(text(&out.stdout).contains("optimal\t0\t"));
}

#[test]
fn cli_rejects_unknown_policy() {
    let out = mpmab(&["run", "--scenario", "bernoulli9", "--policies", "greedy"]);
    assert!(!out.status.success());
    let stderr = text(&out.stderr);
    assert!(stderr.contains("greedy"));
    for name in PolicyKind::ALL {
        assert!(stderr.contains(name.name()), "{name} not listed: {stderr}");
    }
}

#[test]
fn cli_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "scenario = \"bernoulli9\"\nhorizon = 10\nreps = 0\n[[policies]]\nkind = \"mpsesa\"\n").unwrap();
    let out = mpmab(&["run", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("reps"));
}

#[test]
fn cli_ci_compare_and_bounds() {
    let out = mpmab(&["ci-compare", "--horizon", "1000", "--points", "5"]);
    assert!(out.status.success());
    assert_eq!(text(&out.stdout).lines().count(), 6);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let out = mpmab(&["bounds", "--scenario", "gaussian9", "--points", "4", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("lower\t24.5"), "{stdout}");
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 5);
}

#[test]
fn cli_sample_complexity() {
    let out = mpmab(&["sample-complexity", "--mean", "0.8", "--capacity", "2", "--reps", "20"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    let fields: Vec<&str> = stdout.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(fields[0], "20");
    assert_eq!(fields[2], "1");
}

#[test]
fn cli_help_lists_run_flags() {
    let out = mpmab(&["run", "--help"]);
    let help = text(&out.stdout);
    for flag in [
        "--config", "--scenario", "--policies", "--horizon", "--reps", "--seed", "--gamma", "--xi", "--width",
        "--stride", "--out", "--threads",
    ] {
        assert!(help.contains(flag), "{flag} missing");
    }
}
