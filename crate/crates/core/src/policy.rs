//! The decision interface shared by every threshold-setting strategy:
//! greedy baseline, PID controller, trained RL agents, and test stubs.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{CampaignState, UnitInterval};

/// Maps a campaign observation to the next viewability threshold.
///
/// Implementations return a raw `f64`; the episode runner enforces the
/// `[0, 1]` contract and surfaces violations as policy-contract errors.
/// `&mut self` allows stateful controllers (PID) to update their memory.
pub trait ThresholdPolicy {
    fn decide(&mut self, state: &CampaignState) -> f64;
}

/// Always answers with the same threshold.
#[derive(Debug, Clone, Copy)]
pub struct ConstantPolicy(pub UnitInterval);

impl ThresholdPolicy for ConstantPolicy {
    fn decide(&mut self, _state: &CampaignState) -> f64 {
        self.0.value()
    }
}

/// Draws each threshold uniformly from `[0, 1)`, blind to the state. Used to
/// collect exploratory rollouts and as the no-skill baseline in comparisons.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl ThresholdPolicy for RandomPolicy {
    fn decide(&mut self, _state: &CampaignState) -> f64 {
        self.rng.random::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::UnitInterval;

    fn state() -> CampaignState {
        CampaignState::new(
            UnitInterval::new(0.5).unwrap(),
            UnitInterval::new(0.8).unwrap(),
            UnitInterval::new(0.4).unwrap(),
        )
    }

    #[test]
    fn constant_policy_echoes_value() {
        let mut p = ConstantPolicy(UnitInterval::new(0.37).unwrap());
        assert_eq!(p.decide(&state()), 0.37);
    }

    #[test]
    fn random_policy_is_seed_deterministic() {
        let mut a = RandomPolicy::new(9);
        let mut b = RandomPolicy::new(9);
        for _ in 0..32 {
            let x = a.decide(&state());
            assert_eq!(x, b.decide(&state()));
            assert!((0.0..1.0).contains(&x));
        }
    }
}
