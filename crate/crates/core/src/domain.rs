//! Shared numeric primitives: bounded probabilities, the logit/sigmoid pair,
//! and the campaign reward.
//!
//! Everything here is a pure value type or a pure function; callers may share
//! them freely across threads.

use std::fmt;

use crate::error::{Error, Result};

/// Clamp applied to logit inputs so the transform stays finite at 0 and 1.
pub const LOGIT_EPS: f64 = 1e-6;

/// Default reward exponent; larger values make the reward curve fall off
/// faster away from the goal.
pub const DEFAULT_REWARD_EXPONENT: f64 = 2.0;

/// A probability-like quantity guaranteed to lie in `[0, 1]`.
///
/// Used for measured viewability, viewability goals and thresholds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct UnitInterval(f64);

impl UnitInterval {
    pub const ZERO: UnitInterval = UnitInterval(0.0);
    pub const ONE: UnitInterval = UnitInterval(1.0);

    /// Construct from a raw value, rejecting NaN and anything outside `[0, 1]`.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfUnitInterval { value });
        }
        Ok(UnitInterval(value))
    }

    /// Construct by clamping into `[0, 1]`. Panics on NaN, which is always a
    /// caller bug here.
    pub fn clamped(value: f64) -> Self {
        assert!(!value.is_nan(), "cannot clamp NaN into [0, 1]");
        UnitInterval(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for UnitInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Parameters of the campaign reward: the goal and the exponent applied to
/// the closeness term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardParams {
    pub goal: UnitInterval,
    pub exponent: f64,
}

impl RewardParams {
    pub fn new(goal: UnitInterval, exponent: f64) -> Result<Self> {
        if !exponent.is_finite() || exponent <= 0.0 {
            return Err(Error::invalid_param(
                "exponent",
                format!("must be a positive finite real, got {exponent}"),
            ));
        }
        Ok(RewardParams { goal, exponent })
    }

    /// Reward with the default squared closeness term.
    pub fn squared(goal: UnitInterval) -> Self {
        RewardParams {
            goal,
            exponent: DEFAULT_REWARD_EXPONENT,
        }
    }
}

/// The observation handed to a threshold policy: measured viewability, the
/// campaign goal, and the threshold chosen at the previous interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampaignState {
    pub viewability: UnitInterval,
    pub goal: UnitInterval,
    pub prev_threshold: UnitInterval,
}

impl CampaignState {
    pub fn new(
        viewability: UnitInterval,
        goal: UnitInterval,
        prev_threshold: UnitInterval,
    ) -> Self {
        CampaignState {
            viewability,
            goal,
            prev_threshold,
        }
    }

    /// Feature vector consumed by value/policy networks, in a fixed order.
    pub fn features(&self) -> [f64; 3] {
        [
            self.viewability.value(),
            self.goal.value(),
            self.prev_threshold.value(),
        ]
    }
}

/// Campaign reward `(1 - |v - goal|)^exponent`, always in `[0, 1]` and
/// maximized exactly at `v = goal`. Over-goal viewability is penalized
/// symmetrically: excess viewability is bought at some expense.
pub fn reward(v: UnitInterval, params: &RewardParams) -> f64 {
    let closeness = 1.0 - (v.value() - params.goal.value()).abs();
    closeness.powf(params.exponent)
}

/// Logit transform with the input clamped to `[eps, 1 - eps]`, so the result
/// is finite for every value in `[0, 1]`.
pub fn safe_logit(x: UnitInterval, eps: f64) -> f64 {
    assert!(
        eps > 0.0 && eps < 0.5,
        "logit clamp eps must lie in (0, 0.5), got {eps}"
    );
    let clamped = x.value().clamp(eps, 1.0 - eps);
    (clamped / (1.0 - clamped)).ln()
}

/// Standard logistic sigmoid; the inverse of [`safe_logit`] away from the
/// clamp region.
pub fn sigmoid(x: f64) -> UnitInterval {
    assert!(!x.is_nan(), "sigmoid input must not be NaN");
    UnitInterval(1.0 / (1.0 + (-x).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_interval_rejects_out_of_range() {
        assert!(UnitInterval::new(-0.001).is_err());
        assert!(UnitInterval::new(1.001).is_err());
        assert!(UnitInterval::new(f64::NAN).is_err());
        assert_eq!(UnitInterval::new(0.0).unwrap().value(), 0.0);
        assert_eq!(UnitInterval::new(1.0).unwrap().value(), 1.0);
    }

    #[test]
    fn reward_peaks_at_goal() {
        let params = RewardParams::squared(UnitInterval::new(0.80).unwrap());
        assert_eq!(reward(UnitInterval::new(0.80).unwrap(), &params), 1.0);
    }

    #[test]
    fn reward_direct_evaluation() {
        let params = RewardParams::squared(UnitInterval::new(0.80).unwrap());
        let below = reward(UnitInterval::new(0.60).unwrap(), &params);
        assert!((below - 0.64).abs() < 1e-12);
        // over-goal is penalized symmetrically
        let above = reward(UnitInterval::new(0.95).unwrap(), &params);
        assert!((above - 0.7225).abs() < 1e-12);
    }

    #[test]
    fn reward_nonincreasing_in_distance() {
        let params = RewardParams::squared(UnitInterval::new(0.7).unwrap());
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let d = i as f64 / 1000.0 * 0.7;
            let r = reward(UnitInterval::new(0.7 - d).unwrap(), &params);
            assert!(r <= prev + 1e-15, "reward rose as distance grew at d={d}");
            prev = r;
        }
    }

    #[test]
    fn reward_params_reject_bad_exponent() {
        let goal = UnitInterval::new(0.5).unwrap();
        assert!(RewardParams::new(goal, 0.0).is_err());
        assert!(RewardParams::new(goal, -1.0).is_err());
        assert!(RewardParams::new(goal, f64::NAN).is_err());
        assert!(RewardParams::new(goal, 1.0).is_ok());
    }

    #[test]
    fn logit_symmetry_point() {
        assert_eq!(safe_logit(UnitInterval::new(0.5).unwrap(), LOGIT_EPS), 0.0);
    }

    #[test]
    fn logit_scalar_value() {
        // ln(0.7 / 0.3)
        let got = safe_logit(UnitInterval::new(0.7).unwrap(), LOGIT_EPS);
        assert!((got - 0.8472978603872034).abs() < 1e-12);
    }

    #[test]
    fn logit_clamps_at_boundary() {
        let got = safe_logit(UnitInterval::ONE, 1e-6);
        assert!((got - 13.815509557935018).abs() < 1e-9);
        let low = safe_logit(UnitInterval::ZERO, 1e-6);
        assert!((low + 13.815509557935018).abs() < 1e-9);
    }

    #[test]
    fn sigmoid_scalar_values() {
        assert_eq!(sigmoid(0.0).value(), 0.5);
        assert!((sigmoid(0.172849).value() - 0.5431049835704294).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_inverts_logit() {
        let x = UnitInterval::new(0.3).unwrap();
        let back = sigmoid(safe_logit(x, LOGIT_EPS)).value();
        assert!((back - 0.3).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn reward_bounded_and_tight(v in 0.0f64..=1.0, goal in 0.0f64..=1.0, exp in 0.1f64..6.0) {
            let params = RewardParams::new(UnitInterval::new(goal).unwrap(), exp).unwrap();
            let r = reward(UnitInterval::new(v).unwrap(), &params);
            prop_assert!((0.0..=1.0).contains(&r));
            if v == goal {
                prop_assert_eq!(r, 1.0);
            } else {
                prop_assert!(r < 1.0);
            }
        }

        #[test]
        fn sigmoid_logit_round_trip(x in 1e-5f64..=0.99999) {
            let back = sigmoid(safe_logit(UnitInterval::new(x).unwrap(), LOGIT_EPS)).value();
            prop_assert!((back - x).abs() < 1e-9);
        }

        #[test]
        fn sigmoid_antisymmetry(x in -30.0f64..30.0) {
            let lhs = sigmoid(-x).value();
            let rhs = 1.0 - sigmoid(x).value();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
