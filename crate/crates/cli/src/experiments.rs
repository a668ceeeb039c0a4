//! The experiment drivers behind `run-experiment`: algorithm comparison,
//! baseline-policy comparison, RL-versus-PID goal tracking, the policy sanity
//! battery, and hyperparameter tuning. Each writes plot-ready CSVs plus a
//! `summary.json` of headline numbers into its output directory.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde::Serialize;

use viewsim_core::agents::{
    compare_algorithms, comparison_eval_config, comparison_rollout_config, td3_train, train,
    AgentConfig, Algo, TrainedPolicy,
};
use viewsim_core::auction::{
    collect_random_rollouts, run_episode, run_schedule, EpisodeReport, SimConfig, TransitionSample,
};
use viewsim_core::bayesopt::{tune, ParamDim, ParamSpace, Scale};
use viewsim_core::controllers::{
    check_goal_reaching, check_stability_at_goal, default_sweep_grid, rationality_sweep,
    write_sweep_report, PidController,
};
use viewsim_core::dataset::{generate_lld, split_train_eval, ImpressionRecord};
use viewsim_core::domain::UnitInterval;
use viewsim_core::env_model::{
    collect_response_rollouts, measure_realized_sensitivity, run_response_schedule, EnvModelParams,
    GreedyPolicy, ALPHA_MEAN_POSITIVE_REFERENCE, ALPHA_MEDIAN_REFERENCE,
};
use viewsim_core::policy::RandomPolicy;
use viewsim_core::predictors::{
    auc, bid_price, predict_view_probability, train_bid_model, train_logistic, LinearModel,
};

use crate::config::{benchmark_continuous, RunConfig};

/// Everything the auction-replay experiments share: generated logs, the
/// chronological split, and the two simulator models trained on the first
/// half.
pub struct Pipeline {
    pub train: Vec<ImpressionRecord>,
    pub eval: Vec<ImpressionRecord>,
    pub view_model: LinearModel,
    pub bid_model: LinearModel,
    pub sim: SimConfig,
}

pub fn build_pipeline(config: &RunConfig) -> Result<Pipeline> {
    let generator = config.generator.to_core();
    let records = generate_lld(&generator).context("generating synthetic logs")?;
    let (train, eval) = split_train_eval(&records, config.split_fraction())?;
    let train_config = config.predictors.to_core();
    let view_model = train_logistic(&train, &train_config).context("training view model")?;
    let bid_model = train_bid_model(&train, &train_config).context("training bid model")?;
    let sim = config.sim.to_core().map_err(|e| anyhow!(e))?;
    Ok(Pipeline {
        train,
        eval,
        view_model,
        bid_model,
        sim,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_rewards_csv(path: &Path, rows: &[(String, u64, Vec<f64>)]) -> Result<()> {
    let mut out = String::from("algo,seed,interval,reward\n");
    for (algo, seed, rewards) in rows {
        for (interval, reward) in rewards.iter().enumerate() {
            out.push_str(&format!("{algo},{seed},{interval},{reward}\n"));
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[derive(Serialize)]
struct CompareSummary {
    algos: Vec<String>,
    mean_final_reward: Vec<(String, f64)>,
    mean_day_reward: Vec<(String, f64)>,
    random_mean_final_reward: f64,
    seeds: Vec<u64>,
}

/// Train the four algorithms on identical rollout logs and evaluate them on
/// the disjoint half, plus a uniform-random reference arm.
pub fn run_compare_algos(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let pipeline = build_pipeline(config)?;
    let agent_configs = config.agent_configs().map_err(|e| anyhow!(e))?;
    let seeds = config.seeds();
    let table = compare_algorithms(
        &pipeline.train,
        &pipeline.eval,
        &pipeline.view_model,
        &pipeline.bid_model,
        &pipeline.sim,
        &agent_configs,
        &seeds,
        config.rollout_episodes(),
    )?;
    let rows: Vec<(String, u64, Vec<f64>)> = table
        .cells
        .iter()
        .map(|c| (c.algo.clone(), c.seed, c.interval_rewards.clone()))
        .collect();
    write_rewards_csv(&out_dir.join("rewards.csv"), &rows)?;

    let mut random_finals = Vec::new();
    for &seed in &seeds {
        let eval_config = comparison_eval_config(&pipeline.sim, seed);
        let mut random = RandomPolicy::new(seed);
        let report = run_episode(
            &mut random,
            &pipeline.eval,
            &pipeline.view_model,
            &pipeline.bid_model,
            &eval_config,
        )?;
        random_finals.push(*report.interval_rewards().last().unwrap());
    }
    let algos = table.algos();
    let summary = CompareSummary {
        mean_final_reward: algos
            .iter()
            .map(|a| (a.clone(), table.mean_final_reward(a).unwrap()))
            .collect(),
        mean_day_reward: algos
            .iter()
            .map(|a| {
                let days: Vec<f64> = table
                    .cells
                    .iter()
                    .filter(|c| &c.algo == a)
                    .map(|c| c.day_reward)
                    .collect();
                (a.clone(), days.iter().sum::<f64>() / days.len() as f64)
            })
            .collect(),
        algos,
        random_mean_final_reward: random_finals.iter().sum::<f64>() / random_finals.len() as f64,
        seeds,
    };
    write_json(&out_dir.join("summary.json"), &summary)
}

/// Cumulative rewards per interval.
fn cumulative(rewards: &[f64]) -> Vec<f64> {
    rewards
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect()
}

#[derive(Serialize)]
struct BaselineArmSummary {
    arm: String,
    seed: u64,
    first_quarter_cumulative: f64,
    final_cumulative: f64,
}

#[derive(Serialize)]
struct BaselinesSummary {
    realized_alpha_median: f64,
    goal: f64,
    arms: Vec<BaselineArmSummary>,
    /// First interval at which a greedy arm's cumulative reward overtakes
    /// the model-free arm's, per seed (None when it never happens).
    median_arm_crossover_interval: Vec<(u64, Option<usize>)>,
}

/// Default TD3 training budget on the response process.
pub fn baselines_td3_config() -> AgentConfig {
    let mut config = benchmark_continuous(Algo::Td3);
    config.epochs = 200;
    config
}

/// The baseline-policy comparison: both reference sensitivities against a
/// TD3 policy trained on random rollouts, on the logit-response process.
pub fn run_baselines(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let process = config.response_process.to_core().map_err(|e| anyhow!(e))?;
    let goal = config.response_process.goal().map_err(|e| anyhow!(e))?;
    let goals = vec![goal; 24];
    let seeds = config.seeds();
    let rollout_episodes = config.rollout_episodes.unwrap_or(300);

    let mut rows = Vec::new();
    let mut arms = Vec::new();
    let mut crossovers = Vec::new();
    let mut alpha_medians = Vec::new();
    for &seed in &seeds {
        let mut seeded = process.clone();
        seeded.seed = seed;
        let rollouts = collect_response_rollouts(&seeded, &goals, rollout_episodes)?;
        alpha_medians.push(measure_realized_sensitivity(&seeded, goals.len(), 100)?);

        let mut td3_config = baselines_td3_config();
        td3_config.seed = seed;
        let outcome = td3_train(&rollouts, &td3_config)?;

        let mut arm_rewards: Vec<(String, Vec<f64>)> = Vec::new();
        for (name, alpha) in [
            ("greedy_alpha_median", ALPHA_MEDIAN_REFERENCE),
            ("greedy_alpha_meanpos", ALPHA_MEAN_POSITIVE_REFERENCE),
        ] {
            let mut policy = GreedyPolicy::new(EnvModelParams::new(alpha)?);
            let transitions = run_response_schedule(&mut policy, &seeded, &goals)?;
            arm_rewards.push((name.into(), transitions.iter().map(|t| t.reward).collect()));
        }
        let mut td3_policy = outcome.policy;
        let transitions = run_response_schedule(&mut td3_policy, &seeded, &goals)?;
        arm_rewards.push(("td3".into(), transitions.iter().map(|t| t.reward).collect()));

        let quarter = goals.len() / 4;
        for (name, rewards) in &arm_rewards {
            let cum = cumulative(rewards);
            arms.push(BaselineArmSummary {
                arm: name.clone(),
                seed,
                first_quarter_cumulative: cum[quarter - 1],
                final_cumulative: *cum.last().unwrap(),
            });
            rows.push((name.clone(), seed, rewards.clone()));
        }
        let cum_median = cumulative(&arm_rewards[0].1);
        let cum_td3 = cumulative(&arm_rewards[2].1);
        let crossover = (0..cum_td3.len()).find(|&i| cum_median[i] >= cum_td3[i]);
        crossovers.push((seed, crossover));
    }
    write_rewards_csv(&out_dir.join("rewards.csv"), &rows)?;
    let summary = BaselinesSummary {
        realized_alpha_median: alpha_medians.iter().sum::<f64>() / alpha_medians.len() as f64,
        goal: goal.value(),
        arms,
        median_arm_crossover_interval: crossovers,
    };
    write_json(&out_dir.join("summary.json"), &summary)
}

/// The goal-change schedule: 96 intervals, goal raised at half time and
/// reduced at three quarters.
pub fn goal_change_schedule() -> Vec<UnitInterval> {
    let mut goals = vec![UnitInterval::clamped(0.70); 48];
    goals.extend(vec![UnitInterval::clamped(0.80); 24]);
    goals.extend(vec![UnitInterval::clamped(0.60); 24]);
    goals
}

#[derive(Serialize)]
struct RlVsPidSummary {
    band: f64,
    first_goal: f64,
    intervals_to_band: Vec<(String, Option<usize>)>,
    mean_threshold_before_reduction: Vec<(String, f64)>,
    mean_threshold_after_reduction: Vec<(String, f64)>,
}

fn intervals_to_band(report: &EpisodeReport, goal: f64, band: f64) -> Option<usize> {
    report
        .intervals
        .iter()
        .position(|r| (r.measured_viewability.value() - goal).abs() <= band)
        .map(|i| i + 1)
}

/// RL control versus the rule-based PID loop on the goal-change schedule.
pub fn run_rl_vs_pid(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let mut pipeline = build_pipeline(config)?;
    let goals = goal_change_schedule();
    pipeline.sim.goal = goals[0];
    let seed = *config.seeds().first().unwrap();

    let rollout_config = comparison_rollout_config(&pipeline.sim, seed);
    let transitions = collect_random_rollouts(
        &pipeline.train,
        &pipeline.view_model,
        &pipeline.bid_model,
        &rollout_config,
        config.rollout_episodes(),
    )?;
    let mut td3_config = benchmark_continuous(Algo::Td3);
    td3_config.seed = seed;
    let outcome = train(&transitions, &td3_config)?;

    let eval_config = comparison_eval_config(&pipeline.sim, seed);
    let mut td3_policy = outcome.policy;
    let td3_report = run_schedule(
        &mut td3_policy,
        &pipeline.eval,
        &pipeline.view_model,
        &pipeline.bid_model,
        &eval_config,
        &goals,
    )?;
    let mut pid = PidController::new(config.pid.to_core().map_err(|e| anyhow!(e))?);
    let pid_report = run_schedule(
        &mut pid,
        &pipeline.eval,
        &pipeline.view_model,
        &pipeline.bid_model,
        &eval_config,
        &goals,
    )?;

    let mut out = String::from("arm,interval,goal,threshold,viewability,reward,collapse\n");
    for (arm, report) in [("td3", &td3_report), ("pid", &pid_report)] {
        for (i, r) in report.intervals.iter().enumerate() {
            out.push_str(&format!(
                "{arm},{i},{},{},{},{},{}\n",
                goals[i].value(),
                r.threshold,
                r.measured_viewability,
                r.reward,
                r.delivery_collapse as u8,
            ));
        }
    }
    fs::write(out_dir.join("viewability_timeline.csv"), out)?;

    let band = 0.05;
    let mean_threshold = |report: &EpisodeReport, range: std::ops::Range<usize>| -> f64 {
        let slice = &report.intervals[range];
        slice.iter().map(|r| r.threshold.value()).sum::<f64>() / slice.len() as f64
    };
    let summary = RlVsPidSummary {
        band,
        first_goal: goals[0].value(),
        intervals_to_band: vec![
            ("td3".into(), intervals_to_band(&td3_report, 0.70, band)),
            ("pid".into(), intervals_to_band(&pid_report, 0.70, band)),
        ],
        mean_threshold_before_reduction: vec![
            ("td3".into(), mean_threshold(&td3_report, 48..72)),
            ("pid".into(), mean_threshold(&pid_report, 48..72)),
        ],
        mean_threshold_after_reduction: vec![
            ("td3".into(), mean_threshold(&td3_report, 72..96)),
            ("pid".into(), mean_threshold(&pid_report, 72..96)),
        ],
    };
    write_json(&out_dir.join("summary.json"), &summary)
}

#[derive(Serialize)]
struct SanitySummary {
    policy: String,
    goal_reached: bool,
    intervals_to_goal: usize,
    stable_at_goal: bool,
    sweep_pass_fraction: f64,
}

/// The quick policy sanity battery on a serialized policy file.
pub fn run_sanity(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let policy_path = config
        .policy
        .as_ref()
        .ok_or_else(|| anyhow!("sanity experiment needs `policy` in the config"))?;
    let mut policy = TrainedPolicy::read(policy_path)?;
    let toy = config.toy_env.to_core().map_err(|e| anyhow!(e))?;
    let goal = UnitInterval::new(config.sanity_goal.unwrap_or(0.8))
        .map_err(|_| anyhow!("sanity_goal must lie in [0, 1]"))?;

    let reach = check_goal_reaching(&mut policy, goal, &toy, 20, 0.05);
    let stable = check_stability_at_goal(&mut policy, goal, &toy, 10, 0.05);
    let sweep = rationality_sweep(&mut policy, &default_sweep_grid());
    write_sweep_report(&sweep, &out_dir.join("sanity_report.csv"))?;
    let summary = SanitySummary {
        policy: policy_path.display().to_string(),
        goal_reached: reach.reached,
        intervals_to_goal: reach.steps,
        stable_at_goal: stable,
        sweep_pass_fraction: sweep.pass_fraction,
    };
    write_json(&out_dir.join("summary.json"), &summary)
}

#[derive(Serialize)]
struct TuneSummary {
    budget: usize,
    best_value: f64,
    best_point: Vec<(String, f64)>,
    flagged_evaluations: usize,
}

/// The tuning space: actor/critic learning rates, epochs, minibatch, gamma.
pub fn tuning_space(max_epochs: usize) -> ParamSpace {
    ParamSpace::new(vec![
        ParamDim {
            name: "actor_lr".into(),
            lo: 1e-5,
            hi: 1e-1,
            scale: Scale::Log10,
            integer: false,
        },
        ParamDim {
            name: "critic_lr".into(),
            lo: 1e-5,
            hi: 1e-1,
            scale: Scale::Log10,
            integer: false,
        },
        ParamDim {
            name: "epochs".into(),
            lo: 1.0,
            hi: max_epochs as f64,
            scale: Scale::Linear,
            integer: true,
        },
        ParamDim {
            name: "minibatch".into(),
            lo: 16.0,
            hi: 512.0,
            scale: Scale::Linear,
            integer: true,
        },
        ParamDim {
            name: "gamma".into(),
            lo: 0.5,
            hi: 0.999,
            scale: Scale::Linear,
            integer: false,
        },
    ])
    .expect("static space is valid")
}

/// Build the tuning objective: train DDPG with the candidate hyperparameters
/// on a fixed rollout log, evaluate one simulated day, return its day-level
/// reward.
pub fn tuning_objective<'a>(
    transitions: &'a [TransitionSample],
    eval: &'a [ImpressionRecord],
    view_model: &'a LinearModel,
    bid_model: &'a LinearModel,
    eval_config: &'a SimConfig,
    agent_seed: u64,
) -> impl FnMut(&[f64]) -> viewsim_core::Result<f64> + 'a {
    move |point: &[f64]| {
        let mut agent = AgentConfig::ddpg();
        agent.actor_lr = point[0];
        agent.critic_lr = point[1];
        agent.epochs = point[2] as usize;
        agent.minibatch = point[3] as usize;
        agent.gamma = point[4];
        agent.seed = agent_seed;
        let outcome = train(transitions, &agent)?;
        let mut policy = outcome.policy;
        let report = run_episode(&mut policy, eval, view_model, bid_model, eval_config)?;
        Ok(report.day_reward)
    }
}

/// Hyperparameter tuning with the simulator's day-level reward as objective.
pub fn run_tune(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let pipeline = build_pipeline(config)?;
    let seed = *config.seeds().first().unwrap();
    let rollout_config = comparison_rollout_config(&pipeline.sim, seed);
    let transitions = collect_random_rollouts(
        &pipeline.train,
        &pipeline.view_model,
        &pipeline.bid_model,
        &rollout_config,
        config
            .bayesopt
            .objective_rollout_episodes
            .unwrap_or(config.rollout_episodes()),
    )?;
    let eval_config = comparison_eval_config(&pipeline.sim, seed);
    let space = tuning_space(config.bayesopt.max_epochs.unwrap_or(100));
    let options = config.bayesopt.to_core(out_dir.join("tune_trace.csv"));
    let mut objective = tuning_objective(
        &transitions,
        &pipeline.eval,
        &pipeline.view_model,
        &pipeline.bid_model,
        &eval_config,
        seed,
    );
    let result = tune(&mut objective, &space, &options)?;
    let summary = TuneSummary {
        budget: options.budget,
        best_value: result.best_value,
        best_point: space
            .dims
            .iter()
            .map(|d| d.name.clone())
            .zip(result.best_point.iter().copied())
            .collect(),
        flagged_evaluations: result.trace.iter().filter(|e| e.flagged).count(),
    };
    write_json(&out_dir.join("summary.json"), &summary)
}

/// Data-prep metrics printed by `train-predictors`.
pub fn predictor_metrics(
    eval: &[ImpressionRecord],
    view_model: &LinearModel,
    bid_model: &LinearModel,
) -> Result<(f64, f64)> {
    let scores: Vec<f64> = eval
        .iter()
        .map(|r| Ok(predict_view_probability(view_model, r)?.value()))
        .collect::<viewsim_core::Result<_>>()?;
    let labels: Vec<bool> = eval.iter().map(|r| r.viewed).collect();
    let auc_value = auc(&scores, &labels)?;
    let mut sq_sum = 0.0;
    for rec in eval {
        let diff = bid_price(bid_model, rec)? as f64 - rec.cost_micros as f64;
        sq_sum += diff * diff;
    }
    let rmse = (sq_sum / eval.len() as f64).sqrt();
    Ok((auc_value, rmse))
}
