//! The rule-based control arm and the quick policy sanity battery.
//!
//! The PID controller nudges the threshold by small clamped steps toward the
//! goal, deliberately conservative: extreme moves could damage delivery. The
//! toy environment is a clamped affine map from threshold to "observed"
//! viewability, fast enough to vet a policy in milliseconds before any full
//! simulation.

use std::fs;
use std::path::Path;

use crate::domain::{CampaignState, UnitInterval};
use crate::error::{Error, Result};
use crate::policy::ThresholdPolicy;

/// PID gains and actuator limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidConfig {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Largest threshold move per interval.
    pub step_clamp: f64,
    /// Anti-windup bound on the error integral.
    pub integral_clamp: f64,
    pub threshold_lo: UnitInterval,
    pub threshold_hi: UnitInterval,
}

impl Default for PidConfig {
    fn default() -> Self {
        PidConfig {
            kp: 0.5,
            ki: 0.05,
            kd: 0.0,
            step_clamp: 0.05,
            integral_clamp: 1.0,
            threshold_lo: UnitInterval::ZERO,
            threshold_hi: UnitInterval::clamped(0.99),
        }
    }
}

impl PidConfig {
    pub fn validate(&self) -> Result<()> {
        let gain_ok = |g: f64| g.is_finite() && g >= 0.0;
        if !gain_ok(self.kp) || !gain_ok(self.ki) || !gain_ok(self.kd) {
            return Err(Error::invalid_param(
                "kp/ki/kd",
                "gains must be nonnegative",
            ));
        }
        if !self.step_clamp.is_finite() || self.step_clamp <= 0.0 {
            return Err(Error::invalid_param("step_clamp", "must be positive"));
        }
        if !self.integral_clamp.is_finite() || self.integral_clamp <= 0.0 {
            return Err(Error::invalid_param("integral_clamp", "must be positive"));
        }
        if self.threshold_lo.value() >= self.threshold_hi.value() {
            return Err(Error::invalid_param(
                "threshold_bounds",
                "lower bound must be below upper bound",
            ));
        }
        Ok(())
    }
}

/// Controller memory carried between intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: Option<f64>,
    pub current_threshold: UnitInterval,
}

impl PidState {
    pub fn new(initial_threshold: UnitInterval) -> Self {
        PidState {
            integral: 0.0,
            prev_error: None,
            current_threshold: initial_threshold,
        }
    }
}

/// One controller update: error is goal minus measured viewability; the
/// integral saturates at the anti-windup clamp; the combined correction is
/// clamped to one step and the new threshold to the configured bounds.
pub fn pid_step(
    state: &PidState,
    config: &PidConfig,
    v: UnitInterval,
    goal: UnitInterval,
) -> (PidState, UnitInterval) {
    let error = goal.value() - v.value();
    let integral = (state.integral + error).clamp(-config.integral_clamp, config.integral_clamp);
    let derivative = state.prev_error.map_or(0.0, |prev| error - prev);
    let raw = config.kp * error + config.ki * integral + config.kd * derivative;
    let step = raw.clamp(-config.step_clamp, config.step_clamp);
    let threshold = UnitInterval::clamped(
        (state.current_threshold.value() + step)
            .clamp(config.threshold_lo.value(), config.threshold_hi.value()),
    );
    (
        PidState {
            integral,
            prev_error: Some(error),
            current_threshold: threshold,
        },
        threshold,
    )
}

/// The PID wrapped as a threshold policy. The first observation seeds the
/// controller's threshold from the campaign state.
#[derive(Debug, Clone)]
pub struct PidController {
    pub config: PidConfig,
    state: Option<PidState>,
}

impl PidController {
    pub fn new(config: PidConfig) -> Self {
        PidController {
            config,
            state: None,
        }
    }
}

impl ThresholdPolicy for PidController {
    fn decide(&mut self, observation: &CampaignState) -> f64 {
        let state = self
            .state
            .unwrap_or_else(|| PidState::new(observation.prev_threshold));
        let (next, threshold) = pid_step(
            &state,
            &self.config,
            observation.viewability,
            observation.goal,
        );
        self.state = Some(next);
        threshold.value()
    }
}

/// Toy environment: observed viewability is a clamped affine function of the
/// threshold. Deliberately naive; runs in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyEnvConfig {
    pub intercept: f64,
    pub slope: f64,
}

impl Default for ToyEnvConfig {
    fn default() -> Self {
        ToyEnvConfig {
            intercept: 0.3,
            slope: 0.6,
        }
    }
}

impl ToyEnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.slope == 0.0 || !self.slope.is_finite() || !self.intercept.is_finite() {
            return Err(Error::invalid_param(
                "slope",
                "must be a nonzero finite real",
            ));
        }
        Ok(())
    }
}

/// Convert a threshold into the toy environment's observed viewability.
pub fn toy_step(threshold: UnitInterval, config: &ToyEnvConfig) -> UnitInterval {
    UnitInterval::clamped(config.intercept + config.slope * threshold.value())
}

/// Threshold whose toy response equals the given viewability (clamped).
pub fn toy_inverse(v: UnitInterval, config: &ToyEnvConfig) -> UnitInterval {
    UnitInterval::clamped((v.value() - config.intercept) / config.slope)
}

/// Outcome of the goal-reaching check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GoalCheck {
    pub reached: bool,
    /// Intervals needed to first enter the band (0 when already there).
    pub steps: usize,
}

/// Drive the policy against the toy environment from a cold start (threshold
/// zero) and report whether, and after how many intervals, measured
/// viewability first lands within `band` of the goal.
pub fn check_goal_reaching(
    policy: &mut dyn ThresholdPolicy,
    goal: UnitInterval,
    toy: &ToyEnvConfig,
    max_steps: usize,
    band: f64,
) -> GoalCheck {
    assert!(band > 0.0, "band must be positive");
    assert!(max_steps >= 1, "max_steps must be at least 1");
    let mut state = CampaignState::new(toy_step(UnitInterval::ZERO, toy), goal, UnitInterval::ZERO);
    if (state.viewability.value() - goal.value()).abs() <= band {
        return GoalCheck {
            reached: true,
            steps: 0,
        };
    }
    for step in 1..=max_steps {
        let phi = UnitInterval::clamped(policy.decide(&state));
        let v = toy_step(phi, toy);
        state = CampaignState::new(v, goal, phi);
        if (v.value() - goal.value()).abs() <= band {
            return GoalCheck {
                reached: true,
                steps: step,
            };
        }
    }
    GoalCheck {
        reached: false,
        steps: max_steps,
    }
}

/// Starting exactly at goal, verify the policy does not move the threshold
/// meaningfully: true iff every per-interval threshold change stays within
/// `delta` over `steps` iterations.
pub fn check_stability_at_goal(
    policy: &mut dyn ThresholdPolicy,
    goal: UnitInterval,
    toy: &ToyEnvConfig,
    steps: usize,
    delta: f64,
) -> bool {
    assert!(delta > 0.0, "delta must be positive");
    let mut prev_phi = toy_inverse(goal, toy);
    let mut state = CampaignState::new(goal, goal, prev_phi);
    let mut max_change: f64 = 0.0;
    for _ in 0..steps {
        let phi = UnitInterval::clamped(policy.decide(&state));
        max_change = max_change.max((phi.value() - prev_phi.value()).abs());
        let v = toy_step(phi, toy);
        state = CampaignState::new(v, goal, phi);
        prev_phi = phi;
    }
    max_change <= delta
}

/// One row of the rationality sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub state: CampaignState,
    pub action: UnitInterval,
    pub direction_ok: bool,
}

/// Full sweep table plus the fraction of directionally sane actions.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub pass_fraction: f64,
}

/// Slack allowed when judging action direction.
pub const SWEEP_DELTA: f64 = 0.05;

/// Challenge the policy with an assortment of common states and record, per
/// state, whether the action moved the threshold in the sane direction:
/// under goal must not cut the threshold, over goal must not raise it
/// (within [`SWEEP_DELTA`] slack).
pub fn rationality_sweep(policy: &mut dyn ThresholdPolicy, grid: &[CampaignState]) -> SweepReport {
    assert!(!grid.is_empty(), "sweep grid must be nonempty");
    let mut rows = Vec::with_capacity(grid.len());
    let mut ok = 0usize;
    for &state in grid {
        let action = UnitInterval::clamped(policy.decide(&state));
        let v = state.viewability.value();
        let goal = state.goal.value();
        let phi = state.prev_threshold.value();
        let direction_ok = if v < goal {
            action.value() >= phi - SWEEP_DELTA
        } else if v > goal {
            action.value() <= phi + SWEEP_DELTA
        } else {
            true
        };
        ok += direction_ok as usize;
        rows.push(SweepRow {
            state,
            action,
            direction_ok,
        });
    }
    SweepReport {
        pass_fraction: ok as f64 / rows.len() as f64,
        rows,
    }
}

/// The default sweep grid: viewability 0.2..=0.9, goals {0.6, 0.7, 0.8},
/// previous thresholds 0.2..=0.8, all on 0.1 steps.
pub fn default_sweep_grid() -> Vec<CampaignState> {
    let mut grid = Vec::new();
    for vi in 2..=9 {
        for gi in 6..=8 {
            for pi in 2..=8 {
                grid.push(CampaignState::new(
                    UnitInterval::clamped(vi as f64 / 10.0),
                    UnitInterval::clamped(gi as f64 / 10.0),
                    UnitInterval::clamped(pi as f64 / 10.0),
                ));
            }
        }
    }
    grid
}

/// Exact header of the sweep report CSV.
pub const SWEEP_HEADER: &str = "v,goal,phi_prev,action,direction_ok";

pub fn write_sweep_report(report: &SweepReport, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.state.viewability,
            row.state.goal,
            row.state.prev_threshold,
            row.action,
            row.direction_ok as u8,
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
