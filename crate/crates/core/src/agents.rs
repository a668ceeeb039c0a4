//! Offline (batch) RL on logged transitions: DQN over discretized thresholds,
//! DDPG, and TD3, plus the harness that trains all of them on identical
//! rollout logs and compares their evaluation curves.
//!
//! Training never touches an environment: each algorithm makes full epoch
//! passes over a fixed transition log, regressing critics on bootstrapped
//! targets and (for the actor-critic pair) ascending the critic through the
//! actor. All randomness flows from the config seed.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::auction::{collect_random_rollouts, run_episode, SimConfig, TransitionSample};
use crate::dataset::ImpressionRecord;
use crate::domain::{CampaignState, UnitInterval};
use crate::error::{Error, Result};
use crate::nn::{soft_update, Activation, Adam, Gradients, Mlp};
use crate::policy::ThresholdPolicy;
use crate::predictors::LinearModel;
use crate::rand_util::{mix_seed, standard_normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Dqn,
    Ddpg,
    Td3,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Dqn => "dqn",
            Algo::Ddpg => "ddpg",
            Algo::Td3 => "td3",
        }
    }
}

/// Hyperparameters shared by the three trainers. DQN-only and TD3-only
/// fields are ignored by the other algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub algo: Algo,
    /// Number of discrete threshold bins (DQN only).
    pub n_actions: usize,
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Full passes over the transition log.
    pub epochs: usize,
    pub minibatch: usize,
    /// Polyak coefficient for target networks.
    pub tau: f64,
    /// Std of the smoothing noise on target actions (TD3 only).
    pub policy_noise: f64,
    /// Clip on the smoothing noise (TD3 only).
    pub noise_clip: f64,
    /// Critic steps per actor step (TD3 only).
    pub policy_delay: usize,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl AgentConfig {
    pub fn dqn(n_actions: usize) -> Self {
        AgentConfig {
            algo: Algo::Dqn,
            n_actions,
            ..AgentConfig::base()
        }
    }

    pub fn ddpg() -> Self {
        AgentConfig {
            algo: Algo::Ddpg,
            ..AgentConfig::base()
        }
    }

    pub fn td3() -> Self {
        AgentConfig {
            algo: Algo::Td3,
            ..AgentConfig::base()
        }
    }

    fn base() -> Self {
        AgentConfig {
            algo: Algo::Dqn,
            n_actions: 10,
            gamma: 0.9,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            epochs: 30,
            minibatch: 64,
            tau: 0.005,
            policy_noise: 0.2,
            noise_clip: 0.5,
            policy_delay: 2,
            hidden: vec![64, 64],
            seed: 7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.algo == Algo::Dqn && self.n_actions < 2 {
            return Err(Error::invalid_param("n_actions", "need at least 2 bins"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::invalid_param("gamma", "must lie in [0, 1)"));
        }
        if !(self.actor_lr.is_finite() && self.actor_lr > 0.0)
            || !(self.critic_lr.is_finite() && self.critic_lr > 0.0)
        {
            return Err(Error::invalid_param(
                "actor_lr/critic_lr",
                "must be positive",
            ));
        }
        if self.epochs == 0 {
            return Err(Error::invalid_param("epochs", "must be positive"));
        }
        if self.minibatch == 0 {
            return Err(Error::invalid_param("minibatch", "must be positive"));
        }
        if self.tau.is_nan() || self.tau <= 0.0 || self.tau > 1.0 {
            return Err(Error::invalid_param("tau", "must lie in (0, 1]"));
        }
        if self.algo == Algo::Td3 {
            if self.policy_delay == 0 {
                return Err(Error::invalid_param("policy_delay", "must be positive"));
            }
            if self.policy_noise.is_nan()
                || self.policy_noise < 0.0
                || self.noise_clip.is_nan()
                || self.noise_clip < 0.0
            {
                return Err(Error::invalid_param(
                    "policy_noise/noise_clip",
                    "must be nonnegative",
                ));
            }
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::invalid_param("hidden", "layers must be nonempty"));
        }
        Ok(())
    }
}

/// Bounded transition store with a seeded uniform sampler.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    data: Vec<TransitionSample>,
    capacity: usize,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, seed: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid_param("capacity", "must be positive"));
        }
        Ok(ReplayBuffer {
            data: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Buffer pre-filled with a transition log, sized to hold all of it.
    pub fn from_transitions(transitions: &[TransitionSample], seed: u64) -> Result<Self> {
        let mut buffer = ReplayBuffer::new(transitions.len().max(1), seed)?;
        for &t in transitions {
            buffer.push(t);
        }
        Ok(buffer)
    }

    /// Insert, overwriting the oldest entry once at capacity.
    pub fn push(&mut self, sample: TransitionSample) {
        if self.data.len() < self.capacity {
            self.data.push(sample);
        } else {
            self.data[self.cursor] = sample;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, index: usize) -> &TransitionSample {
        &self.data[index]
    }

    pub fn as_slice(&self) -> &[TransitionSample] {
        &self.data
    }

    /// Uniform minibatch indices (with replacement). Refuses to sample from
    /// a buffer smaller than the minibatch.
    pub fn sample_indices(&mut self, minibatch: usize) -> Result<Vec<usize>> {
        if self.data.len() < minibatch {
            return Err(Error::InsufficientData(format!(
                "buffer holds {} transitions, minibatch needs {minibatch}",
                self.data.len()
            )));
        }
        Ok((0..minibatch)
            .map(|_| self.rng.random_range(0..self.data.len()))
            .collect())
    }

    /// A full shuffled pass over the buffer (one training epoch).
    pub fn shuffled_indices(&mut self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.data.len()).collect();
        order.shuffle(&mut self.rng);
        order
    }
}

/// A trained decision function plus the decoding from network output to a
/// threshold in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedPolicy {
    Dqn { q: Mlp, n_actions: usize },
    Ddpg { actor: Mlp },
    Td3 { actor: Mlp },
}

impl TrainedPolicy {
    pub fn algo(&self) -> Algo {
        match self {
            TrainedPolicy::Dqn { .. } => Algo::Dqn,
            TrainedPolicy::Ddpg { .. } => Algo::Ddpg,
            TrainedPolicy::Td3 { .. } => Algo::Td3,
        }
    }

    /// Deterministic greedy action: argmax bin for DQN (ties to the lower
    /// bin), squashed actor output for the continuous algorithms.
    pub fn act(&self, state: &CampaignState) -> UnitInterval {
        let features = state.features();
        match self {
            TrainedPolicy::Dqn { q, n_actions } => {
                let values = q.forward(&features).expect("state features fit the net");
                let mut best = 0usize;
                for (i, &v) in values.iter().enumerate() {
                    if v > values[best] {
                        best = i;
                    }
                }
                UnitInterval::clamped(decode_bin(best, *n_actions))
            }
            TrainedPolicy::Ddpg { actor } | TrainedPolicy::Td3 { actor } => {
                let out = actor
                    .forward(&features)
                    .expect("state features fit the net");
                UnitInterval::clamped(squash(out[0]))
            }
        }
    }

    /// Serialize: one manifest line `policy,<algo>,<n_actions>,<digest>`
    /// followed by the network in the standard format.
    pub fn write(&self, path: &Path, digest: u64) -> Result<()> {
        let (net, n_actions) = match self {
            TrainedPolicy::Dqn { q, n_actions } => (q, *n_actions),
            TrainedPolicy::Ddpg { actor } => (actor, 0),
            TrainedPolicy::Td3 { actor } => (actor, 0),
        };
        let text = format!(
            "policy,{},{},{:016x}\n{}",
            self.algo().as_str(),
            n_actions,
            digest,
            net.to_text()
        );
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate();
        let (_, manifest) = lines.next().ok_or_else(|| Error::Format {
            path: path.into(),
            reason: "empty policy file".into(),
        })?;
        let fields: Vec<&str> = manifest.split(',').collect();
        if fields.len() != 4 || fields[0] != "policy" {
            return Err(Error::Format {
                path: path.into(),
                reason: "expected manifest `policy,<algo>,<n_actions>,<digest>`".into(),
            });
        }
        let n_actions: usize = crate::dataset::parse_field(path, 1, "n_actions", fields[2])?;
        let net = Mlp::from_lines(path, &mut lines)?;
        match fields[1] {
            "dqn" => Ok(TrainedPolicy::Dqn { q: net, n_actions }),
            "ddpg" => Ok(TrainedPolicy::Ddpg { actor: net }),
            "td3" => Ok(TrainedPolicy::Td3 { actor: net }),
            other => Err(Error::Format {
                path: path.into(),
                reason: format!("unknown policy algo `{other}`"),
            }),
        }
    }
}

impl ThresholdPolicy for TrainedPolicy {
    fn decide(&mut self, state: &CampaignState) -> f64 {
        self.act(state).value()
    }
}

/// Training result: the policy plus summary counters.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: TrainedPolicy,
    /// Mean critic loss over the final epoch.
    pub final_loss: f64,
    pub critic_updates: usize,
    pub actor_updates: usize,
}

/// FNV-1a digest of the canonical config description, recorded in policy
/// manifests for provenance.
pub fn config_digest(config: &AgentConfig) -> u64 {
    let canonical = format!(
        "{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{:?}|{}",
        config.algo.as_str(),
        config.n_actions,
        config.gamma,
        config.actor_lr,
        config.critic_lr,
        config.epochs,
        config.minibatch,
        config.tau,
        config.policy_noise,
        config.noise_clip,
        config.policy_delay,
        config.hidden,
        config.seed,
    );
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in canonical.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    hash
}

/// The uniform bin set `{i / (n_actions - 1)}` used to discretize thresholds.
pub fn action_bins(n_actions: usize) -> Vec<f64> {
    (0..n_actions).map(|i| decode_bin(i, n_actions)).collect()
}

pub fn decode_bin(index: usize, n_actions: usize) -> f64 {
    index as f64 / (n_actions - 1) as f64
}

/// Nearest bin index for a continuous action in `[0, 1]`.
pub fn nearest_bin(action: f64, n_actions: usize) -> usize {
    ((action * (n_actions - 1) as f64).round() as usize).min(n_actions - 1)
}

/// Gradient-norm guards: a wandering early critic must not fling the actor
/// into tanh saturation it cannot recover from.
const ACTOR_GRAD_CLIP: f64 = 1.0;
const CRITIC_GRAD_CLIP: f64 = 10.0;
const ACTOR_WEIGHT_DECAY: f64 = 0.05;

fn squash(raw: f64) -> f64 {
    // tanh output in (-1, 1) mapped onto the threshold range
    0.5 * (raw + 1.0)
}

/// Bootstrapped regression target; terminal transitions regress on the raw
/// reward alone.
pub(crate) fn bellman_target(reward: f64, gamma: f64, terminal: bool, next_value: f64) -> f64 {
    if terminal {
        reward
    } else {
        reward + gamma * next_value
    }
}

/// TD3 target value: bootstrap on the pessimistic (minimum) twin critic.
pub(crate) fn td3_target(reward: f64, gamma: f64, terminal: bool, q1: f64, q2: f64) -> f64 {
    bellman_target(reward, gamma, terminal, q1.min(q2))
}

/// Target-policy smoothing: add clipped noise to the target action, then
/// clip back onto the valid threshold range.
pub(crate) fn smoothed_target_action(raw_action: f64, noise: f64, noise_clip: f64) -> f64 {
    (raw_action + noise.clamp(-noise_clip, noise_clip)).clamp(0.0, 1.0)
}

/// Dispatch on `config.algo`.
pub fn train(transitions: &[TransitionSample], config: &AgentConfig) -> Result<TrainOutcome> {
    match config.algo {
        Algo::Dqn => dqn_train(transitions, config),
        Algo::Ddpg => ddpg_train(transitions, config),
        Algo::Td3 => td3_train(transitions, config),
    }
}

fn check_transitions(transitions: &[TransitionSample]) -> Result<()> {
    if transitions.is_empty() {
        return Err(Error::InsufficientData("no transitions to train on".into()));
    }
    Ok(())
}

/// Train a Q-network over discretized actions: logged thresholds snap to the
/// nearest bin, targets bootstrap through a Polyak-averaged target network.
pub fn dqn_train(transitions: &[TransitionSample], config: &AgentConfig) -> Result<TrainOutcome> {
    config.validate()?;
    check_transitions(transitions)?;
    if config.algo != Algo::Dqn {
        return Err(Error::invalid_param("algo", "dqn_train requires algo=dqn"));
    }
    let n_actions = config.n_actions;
    let mut buffer = ReplayBuffer::from_transitions(transitions, mix_seed(config.seed, 0xB0FF))?;

    let mut sizes = vec![3];
    sizes.extend(&config.hidden);
    sizes.push(n_actions);
    let mut acts = vec![Activation::Relu; config.hidden.len()];
    acts.push(Activation::Identity);
    let mut q = Mlp::new(&sizes, &acts, mix_seed(config.seed, 1))?;
    let mut q_target = q.clone();
    let mut adam = Adam::new(&q, config.critic_lr);

    let states: Vec<[f64; 3]> = transitions.iter().map(|t| t.state.features()).collect();
    let next_states: Vec<[f64; 3]> = transitions
        .iter()
        .map(|t| t.next_state.features())
        .collect();
    let bins: Vec<usize> = transitions
        .iter()
        .map(|t| nearest_bin(t.action.value(), n_actions))
        .collect();

    let mut final_loss = 0.0;
    let mut critic_updates = 0usize;
    for _ in 0..config.epochs {
        let order = buffer.shuffled_indices();
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.minibatch) {
            let mut grads = Gradients::zeros_like(&q);
            let mut batch_loss = 0.0;
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let t = buffer.get(i);
                let next_value = if t.terminal {
                    0.0
                } else {
                    let row = q_target.forward(&next_states[i])?;
                    row.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                };
                let y = bellman_target(t.reward, config.gamma, t.terminal, next_value);
                let trace = q.forward_trace(&states[i])?;
                let diff = trace.output()[bins[i]] - y;
                batch_loss += diff * diff;
                let mut upstream = vec![0.0; n_actions];
                upstream[bins[i]] = 2.0 * diff * scale;
                grads.accumulate(&q.backward(&states[i], &trace, &upstream)?);
            }
            adam.step(&mut q, &grads)?;
            soft_update(&mut q_target, &q, config.tau)?;
            critic_updates += 1;
            epoch_loss += batch_loss * scale;
            batches += 1;
        }
        final_loss = epoch_loss / batches as f64;
    }
    Ok(TrainOutcome {
        policy: TrainedPolicy::Dqn { q, n_actions },
        final_loss,
        critic_updates,
        actor_updates: 0,
    })
}

/// Gradient of `-mean Q(s, actor(s))` with respect to the actor parameters
/// for one state, chained through the critic's action-input gradient and the
/// squash. `scale` is `1 / minibatch`.
pub(crate) fn actor_gradient(
    actor: &Mlp,
    critic: &Mlp,
    state: &[f64; 3],
    scale: f64,
) -> Result<Gradients> {
    let trace = actor.forward_trace(state)?;
    let action = squash(trace.output()[0]);
    let input = [state[0], state[1], state[2], action];
    let critic_trace = critic.forward_trace(&input)?;
    let critic_grads = critic.backward(&input, &critic_trace, &[1.0])?;
    let dq_da = critic_grads.d_input[3];
    // maximize Q: descend -Q; d(action)/d(raw tanh output) = 0.5
    let upstream = [-dq_da * 0.5 * scale];
    actor.backward(state, &trace, &upstream)
}

/// Train DDPG: critic regressed on bootstrapped targets through target
/// networks, actor ascending the critic, Polyak updates every step.
pub fn ddpg_train(transitions: &[TransitionSample], config: &AgentConfig) -> Result<TrainOutcome> {
    config.validate()?;
    check_transitions(transitions)?;
    if config.algo != Algo::Ddpg {
        return Err(Error::invalid_param(
            "algo",
            "ddpg_train requires algo=ddpg",
        ));
    }
    actor_critic_train(transitions, config, false)
}

/// Train TD3: twin critics with pessimistic targets, target-policy smoothing,
/// and delayed actor/target updates.
pub fn td3_train(transitions: &[TransitionSample], config: &AgentConfig) -> Result<TrainOutcome> {
    config.validate()?;
    check_transitions(transitions)?;
    if config.algo != Algo::Td3 {
        return Err(Error::invalid_param("algo", "td3_train requires algo=td3"));
    }
    actor_critic_train(transitions, config, true)
}

fn actor_critic_train(
    transitions: &[TransitionSample],
    config: &AgentConfig,
    twin: bool,
) -> Result<TrainOutcome> {
    let mut buffer = ReplayBuffer::from_transitions(transitions, mix_seed(config.seed, 0xB0FF))?;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 0x4019));

    // smooth activations for the policy head: the optimal threshold map is
    // smooth in the state, and tanh hiddens avoid dead units on this scale
    let mut actor_sizes = vec![3];
    actor_sizes.extend(&config.hidden);
    actor_sizes.push(1);
    let mut actor_acts = vec![Activation::Tanh; config.hidden.len()];
    actor_acts.push(Activation::Tanh);
    let mut critic_sizes = vec![4];
    critic_sizes.extend(&config.hidden);
    critic_sizes.push(1);
    let mut critic_acts = vec![Activation::Tanh; config.hidden.len()];
    critic_acts.push(Activation::Identity);

    let mut actor = Mlp::new(&actor_sizes, &actor_acts, mix_seed(config.seed, 2))?;
    // start the policy head near tanh's linear region (action ~ 0.5)
    actor.scale_final_layer(0.1);
    let mut actor_target = actor.clone();
    let mut critic1 = Mlp::new(&critic_sizes, &critic_acts, mix_seed(config.seed, 3))?;
    let mut critic1_target = critic1.clone();
    let mut critic2 = Mlp::new(&critic_sizes, &critic_acts, mix_seed(config.seed, 4))?;
    let mut critic2_target = critic2.clone();

    // mild decoupled decay keeps the actor recoverable even if an early
    // critic pushes it deep into tanh saturation
    let mut adam_actor = Adam::with_weight_decay(&actor, config.actor_lr, ACTOR_WEIGHT_DECAY);
    let mut adam_critic1 = Adam::new(&critic1, config.critic_lr);
    let mut adam_critic2 = Adam::new(&critic2, config.critic_lr);

    let states: Vec<[f64; 3]> = transitions.iter().map(|t| t.state.features()).collect();
    let next_states: Vec<[f64; 3]> = transitions
        .iter()
        .map(|t| t.next_state.features())
        .collect();

    let mut final_loss = 0.0;
    let mut critic_updates = 0usize;
    let mut actor_updates = 0usize;
    for _ in 0..config.epochs {
        let order = buffer.shuffled_indices();
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.minibatch) {
            let scale = 1.0 / chunk.len() as f64;
            let mut grads1 = Gradients::zeros_like(&critic1);
            let mut grads2 = Gradients::zeros_like(&critic2);
            let mut batch_loss = 0.0;
            for &i in chunk {
                let t = buffer.get(i);
                let y = if t.terminal {
                    bellman_target(t.reward, config.gamma, true, 0.0)
                } else {
                    let raw_next = actor_target.forward(&next_states[i])?[0];
                    let target_action = if twin {
                        let noise = config.policy_noise * standard_normal(&mut noise_rng);
                        smoothed_target_action(squash(raw_next), noise, config.noise_clip)
                    } else {
                        squash(raw_next)
                    };
                    let next_input = [
                        next_states[i][0],
                        next_states[i][1],
                        next_states[i][2],
                        target_action,
                    ];
                    let q1 = critic1_target.forward(&next_input)?[0];
                    if twin {
                        let q2 = critic2_target.forward(&next_input)?[0];
                        td3_target(t.reward, config.gamma, false, q1, q2)
                    } else {
                        bellman_target(t.reward, config.gamma, false, q1)
                    }
                };

                let input = [states[i][0], states[i][1], states[i][2], t.action.value()];
                let trace1 = critic1.forward_trace(&input)?;
                let diff1 = trace1.output()[0] - y;
                batch_loss += diff1 * diff1;
                grads1.accumulate(&critic1.backward(&input, &trace1, &[2.0 * diff1 * scale])?);
                if twin {
                    let trace2 = critic2.forward_trace(&input)?;
                    let diff2 = trace2.output()[0] - y;
                    grads2.accumulate(&critic2.backward(
                        &input,
                        &trace2,
                        &[2.0 * diff2 * scale],
                    )?);
                }
            }
            grads1.clip_norm(CRITIC_GRAD_CLIP);
            adam_critic1.step(&mut critic1, &grads1)?;
            if twin {
                grads2.clip_norm(CRITIC_GRAD_CLIP);
                adam_critic2.step(&mut critic2, &grads2)?;
            }
            critic_updates += 1;

            // DDPG updates the actor and targets every step; TD3 delays both
            // by policy_delay critic steps
            if !twin || critic_updates.is_multiple_of(config.policy_delay) {
                let mut actor_grads = Gradients::zeros_like(&actor);
                for &i in chunk {
                    actor_grads.accumulate(&actor_gradient(&actor, &critic1, &states[i], scale)?);
                }
                actor_grads.clip_norm(ACTOR_GRAD_CLIP);
                adam_actor.step(&mut actor, &actor_grads)?;
                actor_updates += 1;
                soft_update(&mut actor_target, &actor, config.tau)?;
                soft_update(&mut critic1_target, &critic1, config.tau)?;
                if twin {
                    soft_update(&mut critic2_target, &critic2, config.tau)?;
                }
            }
            epoch_loss += batch_loss * scale;
            batches += 1;
        }
        final_loss = epoch_loss / batches as f64;
    }
    let policy = if twin {
        TrainedPolicy::Td3 { actor }
    } else {
        TrainedPolicy::Ddpg { actor }
    };
    Ok(TrainOutcome {
        policy,
        final_loss,
        critic_updates,
        actor_updates,
    })
}

/// One cell of the algorithm comparison: the evaluation reward curve of one
/// (algorithm, seed) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonCell {
    pub algo: String,
    pub seed: u64,
    pub interval_rewards: Vec<f64>,
    pub day_reward: f64,
}

impl ComparisonCell {
    pub fn final_reward(&self) -> f64 {
        *self.interval_rewards.last().unwrap_or(&0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonTable {
    pub cells: Vec<ComparisonCell>,
}

impl ComparisonTable {
    /// Algorithms in first-seen order.
    pub fn algos(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for cell in &self.cells {
            if !seen.contains(&cell.algo) {
                seen.push(cell.algo.clone());
            }
        }
        seen
    }

    /// Mean final-interval reward across seeds for one algorithm.
    pub fn mean_final_reward(&self, algo: &str) -> Option<f64> {
        let finals: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.algo == algo)
            .map(|c| c.final_reward())
            .collect();
        if finals.is_empty() {
            return None;
        }
        Some(finals.iter().sum::<f64>() / finals.len() as f64)
    }
}

/// Exact header of the comparison CSV.
pub const COMPARISON_HEADER: &str = "algo,seed,interval,reward";

pub fn write_comparison_csv(table: &ComparisonTable, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(COMPARISON_HEADER);
    out.push('\n');
    for cell in &table.cells {
        for (interval, reward) in cell.interval_rewards.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                cell.algo, cell.seed, interval, reward
            ));
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Train every configured algorithm on identical random-rollout logs from the
/// training pool and evaluate each on the disjoint evaluation pool, seed by
/// seed. Within one seed, every algorithm sees the same rollout log and the
/// same evaluation day.
#[allow(clippy::too_many_arguments)]
pub fn compare_algorithms(
    train_pool: &[ImpressionRecord],
    eval_pool: &[ImpressionRecord],
    view_model: &LinearModel,
    bid_model: &LinearModel,
    sim_config: &SimConfig,
    agent_configs: &[(String, AgentConfig)],
    seeds: &[u64],
    rollout_episodes: usize,
) -> Result<ComparisonTable> {
    if seeds.is_empty() {
        return Err(Error::invalid_param("seeds", "need at least one seed"));
    }
    if agent_configs.is_empty() {
        return Err(Error::invalid_param("agent_configs", "need at least one"));
    }
    let train_set: HashSet<&ImpressionRecord> = train_pool.iter().collect();
    if eval_pool.iter().any(|rec| train_set.contains(rec)) {
        return Err(Error::invalid_param(
            "eval_pool",
            "training and evaluation pools overlap; they must be disjoint",
        ));
    }

    let mut table = ComparisonTable::default();
    for &seed in seeds {
        let rollout_config = comparison_rollout_config(sim_config, seed);
        let transitions = collect_random_rollouts(
            train_pool,
            view_model,
            bid_model,
            &rollout_config,
            rollout_episodes,
        )?;
        let eval_config = comparison_eval_config(sim_config, seed);
        for (name, base_config) in agent_configs {
            let mut config = base_config.clone();
            config.seed = mix_seed(seed, config_digest(base_config));
            let outcome = train(&transitions, &config)?;
            let mut policy = outcome.policy;
            let report = run_episode(&mut policy, eval_pool, view_model, bid_model, &eval_config)?;
            table.cells.push(ComparisonCell {
                algo: name.clone(),
                seed,
                interval_rewards: report.interval_rewards(),
                day_reward: report.day_reward,
            });
        }
    }
    Ok(table)
}

/// Rollout-collection seed derivation used by [`compare_algorithms`];
/// exposed so callers can reproduce a comparison cell exactly.
pub fn comparison_rollout_config(sim_config: &SimConfig, seed: u64) -> SimConfig {
    let mut config = sim_config.clone();
    config.seed = mix_seed(seed, 0x0111);
    config
}

/// Evaluation-day seed derivation used by [`compare_algorithms`]: every
/// algorithm at one seed replays the same sampled day.
pub fn comparison_eval_config(sim_config: &SimConfig, seed: u64) -> SimConfig {
    let mut config = sim_config.clone();
    config.seed = mix_seed(seed, 0x0222);
    config
}

/// Finite-difference check of the chained actor gradient on a pinned tiny
/// network pair; exposed for the validation suite.
pub fn actor_gradient_check(seed: u64, eps: f64) -> Result<f64> {
    if eps.is_nan() || eps <= 0.0 || eps >= 1e-2 {
        return Err(Error::invalid_param(
            "eps",
            format!("finite-difference step must lie in (0, 1e-2), got {eps}"),
        ));
    }
    let actor = Mlp::new(&[3, 6, 1], &[Activation::Tanh, Activation::Tanh], seed)?;
    let critic = Mlp::new(
        &[4, 6, 1],
        &[Activation::Tanh, Activation::Identity],
        seed.wrapping_add(1),
    )?;
    let state = [0.42, 0.73, 0.31];
    // loss(actor) = -Q(s, squash(actor(s))) for the fixed critic
    let loss = |net: &Mlp| -> Result<f64> {
        let a = squash(net.forward(&state)?[0]);
        Ok(-critic.forward(&[state[0], state[1], state[2], a])?[0])
    };
    let analytic = actor_gradient(&actor, &critic, &state, 1.0)?;
    let mut probe = actor.clone();
    let mut max_rel: f64 = 0.0;
    for idx in 0..probe.param_count() {
        let orig = probe.param(idx);
        probe.set_param(idx, orig + eps);
        let plus = loss(&probe)?;
        probe.set_param(idx, orig - eps);
        let minus = loss(&probe)?;
        probe.set_param(idx, orig);
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic.param(idx);
        max_rel = max_rel.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0));
    }
    Ok(max_rel)
}
