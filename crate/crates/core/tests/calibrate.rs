//! Manual calibration probe for the default synthetic benchmark. Ignored in
//! normal runs; execute with
//! `cargo test -p viewsim-core --test calibrate -- --ignored --nocapture`
//! to print the realized environment characteristics.

use viewsim_core::agents::{compare_algorithms, AgentConfig};
use viewsim_core::auction::{collect_random_rollouts, run_episode, run_interval, SimConfig};
use viewsim_core::dataset::{generate_lld, split_train_eval, GeneratorConfig};
use viewsim_core::domain::{RewardParams, UnitInterval};
use viewsim_core::env_model::{
    alpha_mean_positive, alpha_median, alpha_samples, ControlObservation, EnvModelParams,
    GreedyPolicy,
};
use viewsim_core::policy::RandomPolicy;
use viewsim_core::predictors::{
    auc, predict_view_probability, train_bid_model, train_logistic, TrainConfig,
};

#[test]
#[ignore = "manual calibration probe"]
fn probe_default_benchmark() {
    let gen = GeneratorConfig::default();
    let records = generate_lld(&gen).unwrap();
    let (train, eval) = split_train_eval(&records, 0.5).unwrap();
    let view_model = train_logistic(&train, &TrainConfig::default()).unwrap();
    let bid_model = train_bid_model(&train, &TrainConfig::default()).unwrap();

    let scores: Vec<f64> = eval
        .iter()
        .map(|r| predict_view_probability(&view_model, r).unwrap().value())
        .collect();
    let labels: Vec<bool> = eval.iter().map(|r| r.viewed).collect();
    println!("eval AUC = {:.4}", auc(&scores, &labels).unwrap());
    let view_rate = labels.iter().filter(|&&l| l).count() as f64 / labels.len() as f64;
    println!("eval view rate = {view_rate:.4}");

    println!("threshold grid response on the eval half:");
    let rp = RewardParams::squared(UnitInterval::new(0.75).unwrap());
    for k in 0..=9 {
        let phi = UnitInterval::new(k as f64 / 10.0).unwrap();
        let rep = run_interval(phi, &eval, &view_model, &bid_model, &rp).unwrap();
        println!(
            "  phi={:.1} bids={:6} wins={:6} viewability={:.4}",
            phi.value(),
            rep.bids,
            rep.wins,
            rep.measured_viewability.value()
        );
    }

    let sim = SimConfig::default();
    let transitions = collect_random_rollouts(&eval, &view_model, &bid_model, &sim, 80).unwrap();
    let history: Vec<ControlObservation> = transitions
        .iter()
        .filter(|t| !t.state.viewability.value().eq(&0.0))
        .map(|t| ControlObservation {
            v_t: t.state.viewability,
            phi_t: t.state.prev_threshold,
            v_next: t.next_state.viewability,
            phi_next: t.action,
        })
        .collect();
    let samples = alpha_samples(&history);
    println!(
        "alpha samples: n={} median={:.4} mean_pos={:.4}",
        samples.len(),
        alpha_median(&samples).unwrap(),
        alpha_mean_positive(&samples).unwrap()
    );

    // greedy convergence from the default start, both reference alphas
    for alpha in [0.204, 1.08] {
        let mut greedy = GreedyPolicy::new(EnvModelParams::new(alpha).unwrap());
        let report = run_episode(&mut greedy, &eval, &view_model, &bid_model, &sim).unwrap();
        let gaps: Vec<String> = report
            .intervals
            .iter()
            .take(8)
            .map(|r| format!("{:+.3}", r.measured_viewability.value() - sim.goal.value()))
            .collect();
        println!(
            "greedy alpha={alpha}: v-goal gaps {:?} day_reward={:.4}",
            gaps, report.day_reward
        );
        let thresholds: Vec<String> = report
            .intervals
            .iter()
            .take(8)
            .map(|r| format!("{:.3}", r.threshold.value()))
            .collect();
        println!("  thresholds {thresholds:?}");
    }

    // random-policy baseline reward curve
    let mut random = RandomPolicy::new(99);
    let report = run_episode(&mut random, &eval, &view_model, &bid_model, &sim).unwrap();
    println!(
        "random policy: final-interval reward={:.4} day_reward={:.4}",
        report.intervals.last().unwrap().reward,
        report.day_reward
    );

    // quick agent comparison, one seed
    let configs = vec![
        ("dqn10".to_string(), AgentConfig::dqn(10)),
        ("dqn20".to_string(), AgentConfig::dqn(20)),
        ("ddpg".to_string(), AgentConfig::ddpg()),
        ("td3".to_string(), AgentConfig::td3()),
    ];
    let t0 = std::time::Instant::now();
    let table = compare_algorithms(
        &train,
        &eval,
        &view_model,
        &bid_model,
        &sim,
        &configs,
        &[1],
        100,
    )
    .unwrap();
    println!("one-seed comparison took {:.1?}", t0.elapsed());
    for cell in &table.cells {
        let first: f64 = cell.interval_rewards[..6].iter().sum::<f64>() / 6.0;
        println!(
            "  {} seed {}: final={:.4} first-quarter-mean={:.4} day={:.4}",
            cell.algo,
            cell.seed,
            cell.final_reward(),
            first,
            cell.day_reward
        );
    }
}
