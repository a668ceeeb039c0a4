//! The offline bidding simulator: replays logged impressions one at a time,
//! filters by the viewability threshold, bids through the pricing model, wins
//! by the second-price rule (win iff bid >= recorded cost, pay the recorded
//! cost), and aggregates intervals into campaign states, rewards, and
//! transition samples for offline RL.

use std::fs;
use std::path::Path;

use crate::dataset::{
    check_header, parse_bool_field, parse_field, sample_auction_stream, ImpressionRecord,
};
use crate::domain::{reward, CampaignState, RewardParams, UnitInterval};
use crate::error::{Error, Result};
use crate::policy::{RandomPolicy, ThresholdPolicy};
use crate::predictors::{bid_price, predict_view_probability, LinearModel};
use crate::rand_util::mix_seed;

/// Simulator configuration for one simulated day.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Auctions sampled per simulated day.
    pub n_per_day: usize,
    /// Decision points per simulated day.
    pub intervals_per_day: usize,
    pub goal: UnitInterval,
    pub initial_threshold: UnitInterval,
    /// Measured viewability presented in the first campaign state.
    pub initial_viewability: UnitInterval,
    pub reward_exponent: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_per_day: 24_000,
            intervals_per_day: 24,
            goal: UnitInterval::clamped(0.69),
            initial_threshold: UnitInterval::clamped(0.05),
            initial_viewability: UnitInterval::clamped(0.56),
            reward_exponent: 2.0,
            seed: 7,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.intervals_per_day == 0 {
            return Err(Error::invalid_param(
                "intervals_per_day",
                "must be positive",
            ));
        }
        if self.n_per_day < self.intervals_per_day {
            return Err(Error::invalid_param(
                "n_per_day",
                format!(
                    "must cover at least one auction per interval ({} < {})",
                    self.n_per_day, self.intervals_per_day
                ),
            ));
        }
        if !self.reward_exponent.is_finite() || self.reward_exponent <= 0.0 {
            return Err(Error::invalid_param("reward_exponent", "must be positive"));
        }
        Ok(())
    }

    fn reward_params(&self, goal: UnitInterval) -> RewardParams {
        RewardParams {
            goal,
            exponent: self.reward_exponent,
        }
    }
}

/// Aggregates for one decision interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalReport {
    pub index: usize,
    pub threshold: UnitInterval,
    pub bids: u64,
    pub wins: u64,
    pub viewable_wins: u64,
    pub spend_micros: u64,
    /// Viewable wins over wins; carries the previous interval's value when
    /// nothing was won.
    pub measured_viewability: UnitInterval,
    pub reward: f64,
    pub delivery_collapse: bool,
}

/// One offline training unit: the observation, the action taken, the reward
/// observed at the next measurement, and the successor observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionSample {
    pub state: CampaignState,
    pub action: UnitInterval,
    pub reward: f64,
    pub next_state: CampaignState,
    pub terminal: bool,
}

/// Everything produced by one simulated episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeReport {
    pub intervals: Vec<IntervalReport>,
    pub transitions: Vec<TransitionSample>,
    pub total_bids: u64,
    pub total_wins: u64,
    pub total_viewable_wins: u64,
    pub total_spend_micros: u64,
    /// Viewable wins over wins across the whole episode (0 when nothing won).
    pub day_viewability: UnitInterval,
    /// Reward of the day-level aggregate against the final interval's goal.
    pub day_reward: f64,
}

impl EpisodeReport {
    pub fn interval_rewards(&self) -> Vec<f64> {
        self.intervals.iter().map(|i| i.reward).collect()
    }
}

/// Replay one interval at a fixed threshold: skip impressions whose predicted
/// view probability is below the threshold, bid on the rest, win when the bid
/// covers the recorded cost.
pub fn run_interval(
    threshold: UnitInterval,
    impressions: &[ImpressionRecord],
    view_model: &LinearModel,
    bid_model: &LinearModel,
    reward_params: &RewardParams,
) -> Result<IntervalReport> {
    if impressions.is_empty() {
        return Err(Error::InsufficientData(
            "interval received no impressions".into(),
        ));
    }
    let mut bids = 0u64;
    let mut wins = 0u64;
    let mut viewable_wins = 0u64;
    let mut spend_micros = 0u64;
    for rec in impressions {
        let p = predict_view_probability(view_model, rec)?;
        if p.value() < threshold.value() {
            continue; // no bid below the viewability threshold
        }
        bids += 1;
        let bid = bid_price(bid_model, rec)?;
        if bid >= rec.cost_micros {
            wins += 1;
            spend_micros += rec.cost_micros;
            if rec.viewed {
                viewable_wins += 1;
            }
        }
    }
    let (measured, r, collapse) = if wins > 0 {
        let v = UnitInterval::clamped(viewable_wins as f64 / wins as f64);
        (v, reward(v, reward_params), false)
    } else {
        (UnitInterval::ZERO, 0.0, true)
    };
    Ok(IntervalReport {
        index: 0,
        threshold,
        bids,
        wins,
        viewable_wins,
        spend_micros,
        measured_viewability: measured,
        reward: r,
        delivery_collapse: collapse,
    })
}

/// Run one simulated day: sample the day's auctions, partition them across
/// the configured intervals, and let the policy set the threshold at each
/// interval boundary.
pub fn run_episode(
    policy: &mut dyn ThresholdPolicy,
    pool: &[ImpressionRecord],
    view_model: &LinearModel,
    bid_model: &LinearModel,
    config: &SimConfig,
) -> Result<EpisodeReport> {
    let goals = vec![config.goal; config.intervals_per_day];
    run_schedule(policy, pool, view_model, bid_model, config, &goals)
}

/// Generalization of [`run_episode`] to an explicit per-interval goal
/// schedule (the goal-change experiments use this). The auction budget scales
/// pro rata with the schedule length.
pub fn run_schedule(
    policy: &mut dyn ThresholdPolicy,
    pool: &[ImpressionRecord],
    view_model: &LinearModel,
    bid_model: &LinearModel,
    config: &SimConfig,
    goals: &[UnitInterval],
) -> Result<EpisodeReport> {
    config.validate()?;
    if goals.is_empty() {
        return Err(Error::invalid_param("goals", "schedule must be nonempty"));
    }
    let n_intervals = goals.len();
    let total = (config.n_per_day * n_intervals).div_ceil(config.intervals_per_day);
    let day = sample_auction_stream(pool, total, mix_seed(config.seed, 0x0DA7))?;

    let base = total / n_intervals;
    let remainder = total % n_intervals;

    let mut state = CampaignState::new(
        config.initial_viewability,
        goals[0],
        config.initial_threshold,
    );
    let mut intervals = Vec::with_capacity(n_intervals);
    let mut transitions = Vec::with_capacity(n_intervals);
    let mut offset = 0usize;
    for (i, &goal) in goals.iter().enumerate() {
        let size = base + usize::from(i < remainder);
        let slice = &day[offset..offset + size];
        offset += size;

        let raw = policy.decide(&state);
        if !(0.0..=1.0).contains(&raw) {
            return Err(Error::PolicyContract { value: raw });
        }
        let threshold = UnitInterval::clamped(raw);

        let mut report = run_interval(
            threshold,
            slice,
            view_model,
            bid_model,
            &config.reward_params(goal),
        )?;
        report.index = i;
        if report.delivery_collapse {
            // nothing bought: the campaign keeps showing its last measured
            // viewability, and the interval earns nothing
            report.measured_viewability = state.viewability;
        }

        let next_goal = goals[(i + 1).min(n_intervals - 1)];
        let next_state = CampaignState::new(report.measured_viewability, next_goal, threshold);
        transitions.push(TransitionSample {
            state,
            action: threshold,
            reward: report.reward,
            next_state,
            terminal: i + 1 == n_intervals,
        });
        intervals.push(report);
        state = next_state;
    }

    let total_bids = intervals.iter().map(|r| r.bids).sum();
    let total_wins: u64 = intervals.iter().map(|r| r.wins).sum();
    let total_viewable_wins: u64 = intervals.iter().map(|r| r.viewable_wins).sum();
    let total_spend_micros = intervals.iter().map(|r| r.spend_micros).sum();
    let (day_viewability, day_reward) = if total_wins > 0 {
        let v = UnitInterval::clamped(total_viewable_wins as f64 / total_wins as f64);
        let r = reward(v, &config.reward_params(*goals.last().unwrap()));
        (v, r)
    } else {
        (UnitInterval::ZERO, 0.0)
    };
    Ok(EpisodeReport {
        intervals,
        transitions,
        total_bids,
        total_wins,
        total_viewable_wins,
        total_spend_micros,
        day_viewability,
        day_reward,
    })
}

/// Collect exploratory transitions: each episode resamples its day and draws
/// every threshold uniformly from [0, 1], deliberately visiting extreme
/// values and uncommon moves. One transition per interval, terminal on the
/// last interval of each episode.
pub fn collect_random_rollouts(
    pool: &[ImpressionRecord],
    view_model: &LinearModel,
    bid_model: &LinearModel,
    config: &SimConfig,
    episodes: usize,
) -> Result<Vec<TransitionSample>> {
    if episodes == 0 {
        return Err(Error::invalid_param("episodes", "must be positive"));
    }
    let mut transitions = Vec::with_capacity(episodes * config.intervals_per_day);
    for ep in 0..episodes as u64 {
        let mut episode_config = config.clone();
        episode_config.seed = mix_seed(config.seed, ep.wrapping_add(1));
        let mut policy = RandomPolicy::new(mix_seed(config.seed, 0x7011 + ep));
        let report = run_episode(&mut policy, pool, view_model, bid_model, &episode_config)?;
        transitions.extend(report.transitions);
    }
    Ok(transitions)
}

/// Exact header of the transition CSV format.
pub const TRANSITIONS_HEADER: &str =
    "v,goal,phi_prev,action,reward,v_next,goal_next,phi_prev_next,terminal";

/// Exact header of the episode report CSV format.
pub const EPISODE_HEADER: &str =
    "interval,threshold,bids,wins,viewable_wins,spend_micros,viewability,reward,collapse";

pub fn write_transitions(samples: &[TransitionSample], path: &Path) -> Result<()> {
    let mut out = String::with_capacity(samples.len() * 64);
    out.push_str(TRANSITIONS_HEADER);
    out.push('\n');
    for t in samples {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            t.state.viewability,
            t.state.goal,
            t.state.prev_threshold,
            t.action,
            t.reward,
            t.next_state.viewability,
            t.next_state.goal,
            t.next_state.prev_threshold,
            t.terminal as u8,
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_transitions(path: &Path) -> Result<Vec<TransitionSample>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    check_header(path, lines.next().unwrap_or(""), TRANSITIONS_HEADER)?;
    let mut samples = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Parse {
                path: path.into(),
                line: line_no,
                reason: format!("expected 9 fields, got {}", fields.len()),
            });
        }
        let unit = |column: &str, raw: &str| -> Result<UnitInterval> {
            let value: f64 = parse_field(path, line_no, column, raw)?;
            UnitInterval::new(value).map_err(|_| Error::Parse {
                path: path.into(),
                line: line_no,
                reason: format!("{column}: value {value} outside [0, 1]"),
            })
        };
        samples.push(TransitionSample {
            state: CampaignState::new(
                unit("v", fields[0])?,
                unit("goal", fields[1])?,
                unit("phi_prev", fields[2])?,
            ),
            action: unit("action", fields[3])?,
            reward: parse_field(path, line_no, "reward", fields[4])?,
            next_state: CampaignState::new(
                unit("v_next", fields[5])?,
                unit("goal_next", fields[6])?,
                unit("phi_prev_next", fields[7])?,
            ),
            terminal: parse_bool_field(path, line_no, "terminal", fields[8])?,
        });
    }
    Ok(samples)
}

/// Write per-interval aggregates of an episode.
pub fn write_episode_report(report: &EpisodeReport, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(EPISODE_HEADER);
    out.push('\n');
    for r in &report.intervals {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.index,
            r.threshold,
            r.bids,
            r.wins,
            r.viewable_wins,
            r.spend_micros,
            r.measured_viewability,
            r.reward,
            r.delivery_collapse as u8,
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
