//! The model-based side of the lab: a deterministic logit-space transition
//! model, the sensitivity estimator that calibrates it from paired control
//! observations, and the one-step greedy baseline policy built on top.
//!
//! The model says the logit of measured viewability moves linearly with the
//! logit of the threshold: `logit(v') = logit(v) + alpha * (logit(phi') -
//! logit(phi))`. A single positive `alpha` captures how strongly the campaign
//! responds to threshold moves.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::auction::TransitionSample;
use crate::domain::{
    reward, safe_logit, sigmoid, CampaignState, RewardParams, UnitInterval, LOGIT_EPS,
};
use crate::error::{Error, Result};
use crate::policy::{RandomPolicy, ThresholdPolicy};
use crate::rand_util::{mix_seed, standard_normal};

/// Reference sensitivity: median of the estimator samples on the original
/// campaign data.
pub const ALPHA_MEDIAN_REFERENCE: f64 = 0.204;

/// Reference sensitivity: mean of the strictly positive estimator samples on
/// the original campaign data.
pub const ALPHA_MEAN_POSITIVE_REFERENCE: f64 = 1.08;

/// Threshold-change filter: observations whose logit-space threshold delta is
/// at most this are treated as "threshold unchanged" and skipped.
const MIN_LOGIT_DELTA: f64 = 1e-9;

/// Parameters of the transition model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvModelParams {
    /// Sensitivity of viewability to threshold moves; must be positive
    /// (a higher threshold should yield higher viewability).
    pub alpha: f64,
    /// Logit clamp shared with the domain primitives.
    pub eps: f64,
}

impl EnvModelParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::invalid_param(
                "alpha",
                format!("sensitivity must be a positive finite real, got {alpha}"),
            ));
        }
        Ok(EnvModelParams {
            alpha,
            eps: LOGIT_EPS,
        })
    }
}

impl Default for EnvModelParams {
    fn default() -> Self {
        EnvModelParams {
            alpha: ALPHA_MEDIAN_REFERENCE,
            eps: LOGIT_EPS,
        }
    }
}

/// One paired control observation: viewability and threshold at an interval,
/// and again at the following interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlObservation {
    pub v_t: UnitInterval,
    pub phi_t: UnitInterval,
    pub v_next: UnitInterval,
    pub phi_next: UnitInterval,
}

/// Deterministic next-viewability prediction:
/// `sigma(logit(v) + alpha * (logit(phi_next) - logit(phi)))`.
pub fn predict_next_viewability(
    v_t: UnitInterval,
    phi_t: UnitInterval,
    phi_next: UnitInterval,
    params: &EnvModelParams,
) -> UnitInterval {
    if phi_next == phi_t {
        // zero logit delta; avoid round-trip error through sigmoid
        return v_t;
    }
    let shift = params.alpha * (safe_logit(phi_next, params.eps) - safe_logit(phi_t, params.eps));
    sigmoid(safe_logit(v_t, params.eps) + shift)
}

/// Per-observation sensitivity estimates: the ratio of the viewability logit
/// delta to the threshold logit delta, for every observation where the
/// threshold actually changed. Unchanged thresholds contribute nothing.
pub fn alpha_samples(history: &[ControlObservation]) -> Vec<f64> {
    history
        .iter()
        .filter_map(|obs| {
            let dphi = safe_logit(obs.phi_next, LOGIT_EPS) - safe_logit(obs.phi_t, LOGIT_EPS);
            if dphi.abs() <= MIN_LOGIT_DELTA {
                return None;
            }
            let dv = safe_logit(obs.v_next, LOGIT_EPS) - safe_logit(obs.v_t, LOGIT_EPS);
            Some(dv / dphi)
        })
        .collect()
}

/// Median of the sensitivity samples.
pub fn alpha_median(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData(
            "no sensitivity samples: no observation changed the threshold".into(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN sensitivity sample"));
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

/// Mean of the strictly positive sensitivity samples.
pub fn alpha_mean_positive(samples: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for &s in samples {
        if s > 0.0 {
            sum += s;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InsufficientData(
            "no strictly positive sensitivity samples".into(),
        ));
    }
    Ok(sum / count as f64)
}

/// One-step greedy policy under the transition model: pick the candidate on
/// a uniform threshold grid that maximizes the predicted next-step reward.
/// Ties break toward the lower threshold, which buys more inventory at equal
/// predicted reward.
pub fn greedy_threshold(
    state: &CampaignState,
    params: &EnvModelParams,
    grid_size: usize,
) -> UnitInterval {
    assert!(grid_size >= 2, "greedy grid needs at least 2 candidates");
    let reward_params = RewardParams::squared(state.goal);
    let mut best_phi = UnitInterval::clamped(params.eps);
    let mut best_reward = f64::NEG_INFINITY;
    for i in 0..grid_size {
        let raw = i as f64 / (grid_size - 1) as f64;
        let candidate = UnitInterval::clamped(raw.clamp(params.eps, 1.0 - params.eps));
        let predicted =
            predict_next_viewability(state.viewability, state.prev_threshold, candidate, params);
        let r = reward(predicted, &reward_params);
        if r > best_reward {
            best_reward = r;
            best_phi = candidate;
        }
    }
    best_phi
}

/// Default grid resolution for [`greedy_threshold`].
pub const GREEDY_GRID_SIZE: usize = 1001;

/// The greedy baseline wrapped as a reusable policy.
#[derive(Debug, Clone, Copy)]
pub struct GreedyPolicy {
    pub params: EnvModelParams,
    pub grid_size: usize,
}

impl GreedyPolicy {
    pub fn new(params: EnvModelParams) -> Self {
        GreedyPolicy {
            params,
            grid_size: GREEDY_GRID_SIZE,
        }
    }
}

impl ThresholdPolicy for GreedyPolicy {
    fn decide(&mut self, state: &CampaignState) -> f64 {
        greedy_threshold(state, &self.params, self.grid_size).value()
    }
}

/// Actuator saturation of the response process: thresholds beyond this band
/// act like the band edge, keeping the response bounded near the extremes.
pub const PROCESS_PHI_EPS: f64 = 0.02;

/// A synthetic campaign whose measured viewability follows the logit-space
/// response directly: the environment the transition model assumes, usable
/// as a controlled process for baseline and policy experiments.
///
/// Two realism knobs separate it from the idealized one-step model: the
/// response to a threshold move is distributed over two intervals
/// (`response_fraction` lands now, the rest next interval), and the measured
/// viewability logit carries multiplicative noise. A strictly one-step
/// policy treats the lagged remainder as error; the sensitivity estimator
/// sees an effective (damped) alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseProcessConfig {
    /// Full eventual logit-space sensitivity of a threshold move.
    pub alpha_mid: f64,
    /// Optional sensitivity drift per threshold logit.
    pub alpha_slope: f64,
    /// Fraction of a move's effect that lands in its own interval.
    pub response_fraction: f64,
    /// Multiplicative noise on the measured viewability logit.
    pub noise: f64,
    pub initial_viewability: UnitInterval,
    pub initial_threshold: UnitInterval,
    pub reward_exponent: f64,
    pub seed: u64,
}

impl Default for ResponseProcessConfig {
    fn default() -> Self {
        ResponseProcessConfig {
            alpha_mid: 0.34,
            alpha_slope: 0.0,
            response_fraction: 0.6,
            noise: 0.05,
            initial_viewability: UnitInterval::clamped(0.6),
            initial_threshold: UnitInterval::clamped(0.3),
            reward_exponent: 2.0,
            seed: 7,
        }
    }
}

impl ResponseProcessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_mid > 0.0 && self.alpha_mid.is_finite()) {
            return Err(Error::invalid_param("alpha_mid", "must be positive"));
        }
        if !self.noise.is_finite() || self.noise < 0.0 || !self.alpha_slope.is_finite() {
            return Err(Error::invalid_param(
                "noise/alpha_slope",
                "must be finite, noise nonnegative",
            ));
        }
        if self.response_fraction.is_nan()
            || self.response_fraction <= 0.0
            || self.response_fraction > 1.0
        {
            return Err(Error::invalid_param(
                "response_fraction",
                "must lie in (0, 1]",
            ));
        }
        if !self.reward_exponent.is_finite() || self.reward_exponent <= 0.0 {
            return Err(Error::invalid_param("reward_exponent", "must be positive"));
        }
        Ok(())
    }

    /// Full eventual logit shift caused by moving the threshold: the integral
    /// of the (possibly drifting) sensitivity between the two saturated
    /// threshold logits.
    pub fn logit_shift(&self, phi_prev: UnitInterval, phi_next: UnitInterval) -> f64 {
        let l0 = safe_logit(phi_prev, PROCESS_PHI_EPS);
        let l1 = safe_logit(phi_next, PROCESS_PHI_EPS);
        self.alpha_mid * (l1 - l0) + 0.5 * self.alpha_slope * (l1 * l1 - l0 * l0)
    }
}

/// Run a goal schedule against the response process. Returns one transition
/// per interval; interval rewards live on the transitions.
pub fn run_response_schedule(
    policy: &mut dyn ThresholdPolicy,
    config: &ResponseProcessConfig,
    goals: &[UnitInterval],
) -> Result<Vec<TransitionSample>> {
    config.validate()?;
    if goals.is_empty() {
        return Err(Error::invalid_param("goals", "schedule must be nonempty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = goals.len();
    let mut state = CampaignState::new(
        config.initial_viewability,
        goals[0],
        config.initial_threshold,
    );
    let mut pending_shift = 0.0;
    let mut transitions = Vec::with_capacity(n);
    for (i, &goal) in goals.iter().enumerate() {
        let raw = policy.decide(&state);
        if !(0.0..=1.0).contains(&raw) {
            return Err(Error::PolicyContract { value: raw });
        }
        let threshold = UnitInterval::clamped(raw);
        let full_shift = config.logit_shift(state.prev_threshold, threshold);
        let applied = config.response_fraction * full_shift + pending_shift;
        pending_shift = (1.0 - config.response_fraction) * full_shift;
        let clean = safe_logit(state.viewability, LOGIT_EPS) + applied;
        let measured = clean * (1.0 + config.noise * standard_normal(&mut rng));
        let v_next = sigmoid(measured);
        let reward_params = RewardParams {
            goal,
            exponent: config.reward_exponent,
        };
        let r = reward(v_next, &reward_params);
        let next_goal = goals[(i + 1).min(n - 1)];
        let next_state = CampaignState::new(v_next, next_goal, threshold);
        transitions.push(TransitionSample {
            state,
            action: threshold,
            reward: r,
            next_state,
            terminal: i + 1 == n,
        });
        state = next_state;
    }
    Ok(transitions)
}

/// Exploratory rollouts on the response process: uniform random thresholds,
/// a fresh noise stream per episode.
pub fn collect_response_rollouts(
    config: &ResponseProcessConfig,
    goals: &[UnitInterval],
    episodes: usize,
) -> Result<Vec<TransitionSample>> {
    if episodes == 0 {
        return Err(Error::invalid_param("episodes", "must be positive"));
    }
    let mut transitions = Vec::with_capacity(episodes * goals.len());
    for ep in 0..episodes as u64 {
        let mut episode_config = config.clone();
        episode_config.seed = mix_seed(config.seed, ep.wrapping_add(1));
        let mut policy = RandomPolicy::new(mix_seed(config.seed, 0x6011 + ep));
        transitions.extend(run_response_schedule(&mut policy, &episode_config, goals)?);
    }
    Ok(transitions)
}

/// Sensitivity estimator input assembled from logged transitions.
pub fn observations_from_transitions(transitions: &[TransitionSample]) -> Vec<ControlObservation> {
    transitions
        .iter()
        .map(|t| ControlObservation {
            v_t: t.state.viewability,
            phi_t: t.state.prev_threshold,
            v_next: t.next_state.viewability,
            phi_next: t.action,
        })
        .collect()
}

/// Step-probe policy: hold the threshold for one interval, then jump to a
/// fresh uniform value, and repeat. Isolated steps give the estimator clean
/// step responses; the held intervals are filtered out by its
/// threshold-changed condition.
#[derive(Debug, Clone)]
pub struct StepProbePolicy {
    rng: ChaCha8Rng,
    hold: bool,
}

impl StepProbePolicy {
    pub fn new(seed: u64) -> Self {
        StepProbePolicy {
            rng: ChaCha8Rng::seed_from_u64(seed),
            hold: false,
        }
    }
}

impl ThresholdPolicy for StepProbePolicy {
    fn decide(&mut self, state: &CampaignState) -> f64 {
        use rand::RngExt;
        self.hold = !self.hold;
        if self.hold {
            state.prev_threshold.value()
        } else {
            self.rng.random()
        }
    }
}

/// Realized sensitivity of a response process: the median estimator sample
/// over step-probe episodes (hold one interval, step the next).
pub fn measure_realized_sensitivity(
    config: &ResponseProcessConfig,
    intervals: usize,
    episodes: usize,
) -> Result<f64> {
    if intervals == 0 || episodes == 0 {
        return Err(Error::invalid_param(
            "intervals/episodes",
            "must be positive",
        ));
    }
    let goals = vec![UnitInterval::clamped(0.7); intervals];
    let mut history = Vec::new();
    for ep in 0..episodes as u64 {
        let mut probe_config = config.clone();
        probe_config.seed = mix_seed(config.seed, 0x57E9 ^ ep);
        let mut probe = StepProbePolicy::new(mix_seed(config.seed, 0x920B ^ ep));
        let transitions = run_response_schedule(&mut probe, &probe_config, &goals)?;
        history.extend(observations_from_transitions(&transitions));
    }
    alpha_median(&alpha_samples(&history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn u(x: f64) -> UnitInterval {
        UnitInterval::new(x).unwrap()
    }

    /// Closed-form optimum of the greedy objective, used as an independent
    /// oracle for the grid argmax.
    fn greedy_closed_form(state: &CampaignState, params: &EnvModelParams) -> f64 {
        let shift = (safe_logit(state.goal, params.eps)
            - safe_logit(state.viewability, params.eps))
            / params.alpha;
        sigmoid(safe_logit(state.prev_threshold, params.eps) + shift).value()
    }

    #[test]
    fn unchanged_threshold_predicts_identity() {
        let params = EnvModelParams::new(0.204).unwrap();
        let v = u(0.37);
        let phi = u(0.6);
        assert_eq!(predict_next_viewability(v, phi, phi, &params), v);
    }

    #[test]
    fn predict_matches_scalar_oracle() {
        // sigma(logit(0.5) + alpha * (logit(0.7) - logit(0.5)))
        let median = EnvModelParams::new(ALPHA_MEDIAN_REFERENCE).unwrap();
        let got = predict_next_viewability(u(0.5), u(0.5), u(0.7), &median).value();
        assert!((got - 0.5431049248895672).abs() < 1e-12, "got {got}");

        let mean_pos = EnvModelParams::new(ALPHA_MEAN_POSITIVE_REFERENCE).unwrap();
        let got = predict_next_viewability(u(0.5), u(0.5), u(0.7), &mean_pos).value();
        assert!((got - 0.7140389069736217).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn predict_strictly_increasing_in_next_threshold() {
        let params = EnvModelParams::new(0.7).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 1..100 {
            let phi_next = u(i as f64 / 100.0);
            let v = predict_next_viewability(u(0.4), u(0.3), phi_next, &params).value();
            assert!(v > prev, "not increasing at phi_next={phi_next}");
            prev = v;
        }
    }

    #[test]
    fn alpha_round_trip_recovers_exactly() {
        let alpha = 0.5;
        let params = EnvModelParams::new(alpha).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut history = Vec::new();
        for _ in 0..200 {
            let v_t = u(0.05 + 0.9 * rng.random::<f64>());
            let phi_t = u(0.05 + 0.9 * rng.random::<f64>());
            let phi_next = u(0.05 + 0.9 * rng.random::<f64>());
            let v_next = predict_next_viewability(v_t, phi_t, phi_next, &params);
            history.push(ControlObservation {
                v_t,
                phi_t,
                v_next,
                phi_next,
            });
        }
        let samples = alpha_samples(&history);
        assert!(!samples.is_empty());
        for s in samples {
            assert!((s - alpha).abs() < 1e-9, "sample {s} drifted from {alpha}");
        }
    }

    #[test]
    fn alpha_single_record_inverts_predict_example() {
        let obs = ControlObservation {
            v_t: u(0.5),
            phi_t: u(0.5),
            v_next: u(0.5431049248895672),
            phi_next: u(0.7),
        };
        let samples = alpha_samples(&[obs]);
        assert_eq!(samples.len(), 1);
        assert!((samples[0] - 0.204).abs() < 1e-4, "got {}", samples[0]);
    }

    #[test]
    fn alpha_skips_unchanged_thresholds() {
        let obs = ControlObservation {
            v_t: u(0.5),
            phi_t: u(0.6),
            v_next: u(0.55),
            phi_next: u(0.6),
        };
        assert!(alpha_samples(&[obs]).is_empty());
    }

    #[test]
    fn alpha_median_and_mean_positive() {
        assert_eq!(alpha_median(&[0.1, 0.2, 0.3]).unwrap(), 0.2);
        assert_eq!(alpha_mean_positive(&[-1.0, 2.0, 4.0]).unwrap(), 3.0);
        assert!(matches!(alpha_median(&[]), Err(Error::InsufficientData(_))));
        assert!(matches!(
            alpha_mean_positive(&[-1.0, -2.0]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn greedy_zero_correction_returns_nearest_grid_point() {
        let params = EnvModelParams::new(0.4).unwrap();
        let state = CampaignState::new(u(0.8), u(0.8), u(0.371));
        let phi = greedy_threshold(&state, &params, 1001);
        // v already at goal: best candidate is the grid point nearest phi_t
        assert!((phi.value() - 0.371).abs() < 0.5e-3 + 1e-12, "got {phi}");
    }

    #[test]
    fn greedy_matches_closed_form_example() {
        let params = EnvModelParams::new(1.0).unwrap();
        let state = CampaignState::new(u(0.5), u(0.8), u(0.5));
        let phi = greedy_threshold(&state, &params, 1001);
        assert!((phi.value() - 0.8).abs() < 1e-12, "got {phi}");
        let oracle = greedy_closed_form(&state, &params);
        assert!((oracle - 0.8).abs() < 1e-12);
    }

    #[test]
    fn greedy_saturates_to_lowest_candidate() {
        let params = EnvModelParams::new(0.204).unwrap();
        let state = CampaignState::new(u(0.9), u(0.2), u(0.99));
        let phi = greedy_threshold(&state, &params, 1001);
        // required downward shift exceeds the grid range: lowest candidate wins
        assert_eq!(phi.value(), params.eps);
    }

    #[test]
    fn greedy_agrees_with_closed_form_within_one_spacing() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let grid = 1001usize;
        let spacing = 1.0 / (grid - 1) as f64;
        for _ in 0..500 {
            let state = CampaignState::new(
                u(0.05 + 0.9 * rng.random::<f64>()),
                u(0.1 + 0.8 * rng.random::<f64>()),
                u(0.05 + 0.9 * rng.random::<f64>()),
            );
            let alpha = 0.1 + 2.0 * rng.random::<f64>();
            let params = EnvModelParams::new(alpha).unwrap();
            let oracle = greedy_closed_form(&state, &params);
            if oracle < params.eps || oracle > 1.0 - params.eps {
                continue;
            }
            let got = greedy_threshold(&state, &params, grid).value();
            assert!(
                (got - oracle).abs() <= spacing + 1e-12,
                "grid {got} vs closed form {oracle}"
            );
        }
    }

    #[test]
    fn response_process_is_deterministic_and_rewards_bounded() {
        let config = ResponseProcessConfig::default();
        let goals = vec![u(0.75); 24];
        let run = || {
            let mut policy = crate::policy::RandomPolicy::new(3);
            run_response_schedule(&mut policy, &config, &goals).unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(a.len(), 24);
        assert_eq!(a.iter().filter(|t| t.terminal).count(), 1);
        assert!(a.iter().all(|t| (0.0..=1.0).contains(&t.reward)));
    }

    #[test]
    fn noise_free_flat_process_recovers_mid_alpha() {
        let config = ResponseProcessConfig {
            alpha_slope: 0.0,
            response_fraction: 1.0,
            noise: 0.0,
            ..ResponseProcessConfig::default()
        };
        let goals = vec![u(0.7); 24];
        let transitions = collect_response_rollouts(&config, &goals, 20).unwrap();
        let samples = alpha_samples(&observations_from_transitions(&transitions));
        let median = alpha_median(&samples).unwrap();
        assert!(
            (median - config.alpha_mid).abs() < 1e-6,
            "median {median} vs true {}",
            config.alpha_mid
        );
    }

    #[test]
    fn drifting_process_median_stays_near_mid() {
        let config = ResponseProcessConfig::default();
        let goals = vec![u(0.7); 24];
        let transitions = collect_response_rollouts(&config, &goals, 60).unwrap();
        let samples = alpha_samples(&observations_from_transitions(&transitions));
        let median = alpha_median(&samples).unwrap();
        assert!(
            (median - 0.2).abs() < 0.08,
            "median {median} drifted from 0.2"
        );
    }

    #[test]
    fn greedy_action_dominates_every_grid_candidate() {
        let params = EnvModelParams::new(0.6).unwrap();
        let state = CampaignState::new(u(0.45), u(0.7), u(0.3));
        let grid = 41usize;
        let best = greedy_threshold(&state, &params, grid);
        let rp = RewardParams::squared(state.goal);
        let best_reward = reward(
            predict_next_viewability(state.viewability, state.prev_threshold, best, &params),
            &rp,
        );
        for i in 0..grid {
            let candidate = UnitInterval::clamped(
                (i as f64 / (grid - 1) as f64).clamp(params.eps, 1.0 - params.eps),
            );
            let r = reward(
                predict_next_viewability(
                    state.viewability,
                    state.prev_threshold,
                    candidate,
                    &params,
                ),
                &rp,
            );
            assert!(best_reward >= r, "candidate {candidate} beats greedy");
        }
    }
}
