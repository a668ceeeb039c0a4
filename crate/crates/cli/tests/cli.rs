//! Subcommand behavior: exit codes, output shapes, seed override, and the
//! failure marker.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn viewsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_viewsim"))
        .args(args)
        .current_dir(dir)
        .env_remove("VIEWSIM_SEED")
        .output()
        .expect("binary runs")
}

fn write_quick_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("quick.json");
    fs::write(
        &path,
        r#"{
  "generator": { "n_records": 6000 },
  "sim": { "n_per_day": 1200 },
  "rollout_episodes": 4,
  "seeds": [1],
  "agents": [ { "algo": "dqn", "n_actions": 10, "epochs": 3 } ],
  "bayesopt": { "budget": 5, "init_points": 4, "max_epochs": 2, "objective_rollout_episodes": 3 }
}"#,
    )
    .unwrap();
    path
}

#[test]
fn missing_config_exits_with_usage_code() {
    let tmp = TempDir::new().unwrap();
    let out = viewsim(
        &["gen-data", "--config", "no-such.json", "--out", "x.csv"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("usage"), "stderr: {stderr}");
}

#[test]
fn unknown_config_key_is_named() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("bad.json");
    fs::write(&config, r#"{ "generater": { "n_records": 10 } }"#).unwrap();
    let out = viewsim(
        &["gen-data", "--config", "bad.json", "--out", "x.csv"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("generater"), "stderr: {stderr}");
}

#[test]
fn gen_data_is_deterministic_and_counts_match() {
    let tmp = TempDir::new().unwrap();
    let config = write_quick_config(tmp.path());
    let out = viewsim(
        &[
            "gen-data",
            "--config",
            config.to_str().unwrap(),
            "--out",
            "a.csv",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("6000 records"), "stdout: {stdout}");
    let out2 = viewsim(
        &[
            "gen-data",
            "--config",
            config.to_str().unwrap(),
            "--out",
            "b.csv",
        ],
        tmp.path(),
    );
    assert!(out2.status.success());
    let a = fs::read(tmp.path().join("a.csv")).unwrap();
    let b = fs::read(tmp.path().join("b.csv")).unwrap();
    assert_eq!(a, b, "reruns must be byte-identical");
    assert_eq!(a.iter().filter(|&&c| c == b'\n').count(), 6001);
}

#[test]
fn seed_env_var_changes_the_dataset() {
    let tmp = TempDir::new().unwrap();
    let config = write_quick_config(tmp.path());
    let base = viewsim(
        &[
            "gen-data",
            "--config",
            config.to_str().unwrap(),
            "--out",
            "base.csv",
        ],
        tmp.path(),
    );
    assert!(base.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_viewsim"))
        .args([
            "gen-data",
            "--config",
            config.to_str().unwrap(),
            "--out",
            "seeded.csv",
        ])
        .current_dir(tmp.path())
        .env("VIEWSIM_SEED", "4242")
        .output()
        .unwrap();
    assert!(out.status.success());
    let a = fs::read(tmp.path().join("base.csv")).unwrap();
    let b = fs::read(tmp.path().join("seeded.csv")).unwrap();
    assert_ne!(a, b, "seed override must change the sample");
}

#[test]
fn data_prep_chain_produces_expected_shapes() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let config = write_quick_config(dir);
    let config = config.to_str().unwrap();

    assert!(
        viewsim(&["gen-data", "--config", config, "--out", "lld.csv"], dir)
            .status
            .success()
    );
    let out = viewsim(
        &[
            "train-predictors",
            "--data",
            "lld.csv",
            "--out-dir",
            "models",
            "--config",
            config,
        ],
        dir,
    );
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("auc="), "stdout: {stdout}");
    let auc: f64 = stdout
        .split("auc=")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.0..=1.0).contains(&auc));
    assert!(dir.join("models/view_model.csv").exists());
    assert!(dir.join("models/bid_model.csv").exists());

    let out = viewsim(
        &[
            "rollouts",
            "--data",
            "lld.csv",
            "--models",
            "models",
            "--episodes",
            "10",
            "--out",
            "transitions.csv",
            "--config",
            config,
        ],
        dir,
    );
    assert!(out.status.success(), "{out:?}");
    let text = fs::read_to_string(dir.join("transitions.csv")).unwrap();
    // header + 10 episodes x 24 intervals
    assert_eq!(text.lines().count(), 241);
    let terminals = text
        .lines()
        .skip(1)
        .filter(|line| line.ends_with(",1"))
        .count();
    assert_eq!(terminals, 10);

    let out = viewsim(
        &[
            "train-agent",
            "--algo",
            "dqn10",
            "--transitions",
            "transitions.csv",
            "--out",
            "policy.csv",
            "--config",
            config,
        ],
        dir,
    );
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("final training loss"));
    let manifest = fs::read_to_string(dir.join("policy.csv"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(
        manifest.starts_with("policy,dqn,10,"),
        "manifest: {manifest}"
    );

    // determinism of the training step
    assert!(viewsim(
        &[
            "train-agent",
            "--algo",
            "dqn10",
            "--transitions",
            "transitions.csv",
            "--out",
            "policy2.csv",
            "--config",
            config,
        ],
        dir,
    )
    .status
    .success());
    assert_eq!(
        fs::read(dir.join("policy.csv")).unwrap(),
        fs::read(dir.join("policy2.csv")).unwrap()
    );

    // the sanity battery consumes the trained policy
    fs::write(
        dir.join("sanity.json"),
        r#"{ "policy": "policy.csv", "sanity_goal": 0.8 }"#,
    )
    .unwrap();
    let out = viewsim(
        &[
            "run-experiment",
            "sanity",
            "--config",
            "sanity.json",
            "--out-dir",
            "sanity-out",
        ],
        dir,
    );
    assert!(out.status.success(), "{out:?}");
    let report = fs::read_to_string(dir.join("sanity-out/sanity_report.csv")).unwrap();
    assert!(report.starts_with("v,goal,phi_prev,action,direction_ok"));
    let summary = fs::read_to_string(dir.join("sanity-out/summary.json")).unwrap();
    assert!(summary.contains("sweep_pass_fraction"));
}

#[test]
fn single_class_data_fails_predictor_training() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let mut text = String::from(
        "timestamp,hour_of_day,device_type,domain_id,position,cost_micros,viewed,clicked\n",
    );
    for i in 0..50 {
        text.push_str(&format!("{},0,1,2,0,900,1,0\n", 1_700_006_400 + i));
    }
    fs::write(dir.join("oneclass.csv"), text).unwrap();
    let out = viewsim(
        &[
            "train-predictors",
            "--data",
            "oneclass.csv",
            "--out-dir",
            "models",
        ],
        dir,
    );
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("degenerate"), "stderr: {stderr}");
}

#[test]
fn corrupted_transitions_fail_with_runtime_code() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("bad.csv"),
        "v,goal,phi_prev,action,reward,v_next,goal_next,phi_prev_next,terminal\n0.5,0.7,oops,0.2,0.5,0.5,0.7,0.2,0\n",
    )
    .unwrap();
    let out = viewsim(
        &[
            "train-agent",
            "--algo",
            "td3",
            "--transitions",
            "bad.csv",
            "--out",
            "p.csv",
        ],
        dir,
    );
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn failed_experiment_leaves_marker() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    // sanity without a policy file is a runtime failure inside the driver
    fs::write(
        dir.join("cfg.json"),
        r#"{ "policy": "missing-policy.csv" }"#,
    )
    .unwrap();
    let out = viewsim(
        &[
            "run-experiment",
            "sanity",
            "--config",
            "cfg.json",
            "--out-dir",
            "out",
        ],
        dir,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.join("out/FAILED").exists());
}

#[test]
fn plot_data_missing_dir_is_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = viewsim(&["plot-data", "--in", "nope"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plot_data_emits_one_series_per_curve_idempotently() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fs::create_dir(dir.join("exp")).unwrap();
    fs::write(
        dir.join("exp/rewards.csv"),
        "algo,seed,interval,reward\n\
         td3,1,0,0.5\ntd3,1,1,0.9\ntd3,2,0,0.7\ntd3,2,1,1.0\n\
         pid,1,0,0.2\npid,1,1,0.4\n",
    )
    .unwrap();
    let out = viewsim(&["plot-data", "--in", "exp"], dir);
    assert!(out.status.success(), "{out:?}");
    let td3 = fs::read_to_string(dir.join("exp/plots/reward_td3.dat")).unwrap();
    assert!(td3.contains("0 0.6"), "averaged over seeds: {td3}");
    assert!(td3.contains("1 0.95"));
    assert!(dir.join("exp/plots/reward_pid.dat").exists());
    let before = fs::read(dir.join("exp/plots/reward_td3.dat")).unwrap();
    assert!(viewsim(&["plot-data", "--in", "exp"], dir).status.success());
    assert_eq!(
        before,
        fs::read(dir.join("exp/plots/reward_td3.dat")).unwrap()
    );
}
