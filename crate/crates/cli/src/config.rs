//! The JSON run configuration: every section optional, every field
//! defaulted, unknown keys rejected so typos fail loudly.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use viewsim_core::agents::{AgentConfig, Algo};
use viewsim_core::auction::SimConfig;
use viewsim_core::bayesopt::TuneOptions;
use viewsim_core::controllers::{PidConfig, ToyEnvConfig};
use viewsim_core::dataset::GeneratorConfig;
use viewsim_core::domain::UnitInterval;
use viewsim_core::env_model::ResponseProcessConfig;
use viewsim_core::predictors::TrainConfig;

/// Environment variable that overrides every seed in the run configuration.
pub const SEED_ENV_VAR: &str = "VIEWSIM_SEED";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub generator: GeneratorSection,
    pub sim: SimSection,
    pub predictors: PredictorsSection,
    pub agents: Vec<AgentSection>,
    pub pid: PidSection,
    pub bayesopt: BayesoptSection,
    pub response_process: ResponseProcessSection,
    pub toy_env: ToyEnvSection,
    /// Per-seed experiment repetitions.
    pub seeds: Vec<u64>,
    /// Chronological train/eval split point.
    pub split_fraction: Option<f64>,
    /// Random-rollout episodes used to build training transitions.
    pub rollout_episodes: Option<usize>,
    /// Policy file consumed by the sanity experiment.
    pub policy: Option<PathBuf>,
    /// Sanity-battery goal.
    pub sanity_goal: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| format!("invalid config {}: {e}", path.display()))?;
        if let Ok(raw) = std::env::var(SEED_ENV_VAR) {
            let seed: u64 = raw.parse().map_err(|_| {
                format!("{SEED_ENV_VAR} must be a 64-bit unsigned integer, got `{raw}`")
            })?;
            config.override_seeds(seed);
        }
        config.validate()?;
        Ok(config)
    }

    /// Apply one seed everywhere, for quick experiments.
    pub fn override_seeds(&mut self, seed: u64) {
        self.generator.seed = Some(seed);
        self.sim.seed = Some(seed);
        self.predictors.seed = Some(seed);
        self.bayesopt.seed = Some(seed);
        self.response_process.seed = Some(seed);
        for agent in &mut self.agents {
            agent.seed = Some(seed);
        }
        self.seeds = vec![seed];
    }

    fn validate(&self) -> Result<(), String> {
        if let Some(f) = self.split_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(format!("split_fraction must lie in (0, 1), got {f}"));
            }
        }
        Ok(())
    }

    pub fn split_fraction(&self) -> f64 {
        self.split_fraction.unwrap_or(0.5)
    }

    pub fn rollout_episodes(&self) -> usize {
        self.rollout_episodes.unwrap_or(150)
    }

    pub fn seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![1, 2, 5]
        } else {
            self.seeds.clone()
        }
    }

    /// The four compared algorithms unless the config lists its own.
    pub fn agent_configs(&self) -> Result<Vec<(String, AgentConfig)>, String> {
        if self.agents.is_empty() {
            return Ok(default_agent_roster());
        }
        self.agents
            .iter()
            .map(|section| {
                let config = section.to_core()?;
                Ok((section.label(), config))
            })
            .collect()
    }
}

fn unit(value: f64, name: &str) -> Result<UnitInterval, String> {
    UnitInterval::new(value).map_err(|_| format!("{name} must lie in [0, 1], got {value}"))
}

/// Benchmark roster: the four compared algorithms with the training budgets
/// the experiments were pinned with.
pub fn default_agent_roster() -> Vec<(String, AgentConfig)> {
    vec![
        ("dqn10".into(), benchmark_dqn(10)),
        ("dqn20".into(), benchmark_dqn(20)),
        ("ddpg".into(), benchmark_continuous(Algo::Ddpg)),
        ("td3".into(), benchmark_continuous(Algo::Td3)),
    ]
}

pub fn benchmark_dqn(n_actions: usize) -> AgentConfig {
    let mut config = AgentConfig::dqn(n_actions);
    config.epochs = 40;
    config
}

pub fn benchmark_continuous(algo: Algo) -> AgentConfig {
    let mut config = match algo {
        Algo::Ddpg => AgentConfig::ddpg(),
        _ => AgentConfig::td3(),
    };
    config.epochs = if algo == Algo::Ddpg { 80 } else { 120 };
    config.actor_lr = 5e-4;
    config.minibatch = 128;
    config
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorSection {
    pub n_records: Option<usize>,
    pub seed: Option<u64>,
    pub true_view_weights: Option<Vec<f64>>,
    pub cost_base_micros: Option<u64>,
    pub cost_view_coupling: Option<f64>,
    pub cost_lognormal_sigma: Option<f64>,
    pub duration_days: Option<u32>,
    pub interaction_strength: Option<f64>,
    pub winners_only: Option<bool>,
}

impl GeneratorSection {
    pub fn to_core(&self) -> GeneratorConfig {
        let mut config = GeneratorConfig::default();
        if let Some(v) = self.n_records {
            config.n_records = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = &self.true_view_weights {
            config.true_view_weights = v.clone();
        }
        if let Some(v) = self.cost_base_micros {
            config.cost_base_micros = v;
        }
        if let Some(v) = self.cost_view_coupling {
            config.cost_view_coupling = v;
        }
        if let Some(v) = self.cost_lognormal_sigma {
            config.cost_lognormal_sigma = v;
        }
        if let Some(v) = self.duration_days {
            config.duration_days = v;
        }
        if let Some(v) = self.interaction_strength {
            config.interaction_strength = v;
        }
        if let Some(v) = self.winners_only {
            config.winners_only = v;
        }
        config
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub n_per_day: Option<usize>,
    pub intervals_per_day: Option<usize>,
    pub goal: Option<f64>,
    pub initial_threshold: Option<f64>,
    pub initial_viewability: Option<f64>,
    pub reward_exponent: Option<f64>,
    pub seed: Option<u64>,
}

impl SimSection {
    pub fn to_core(&self) -> Result<SimConfig, String> {
        let mut config = SimConfig::default();
        if let Some(v) = self.n_per_day {
            config.n_per_day = v;
        }
        if let Some(v) = self.intervals_per_day {
            config.intervals_per_day = v;
        }
        if let Some(v) = self.goal {
            config.goal = unit(v, "sim.goal")?;
        }
        if let Some(v) = self.initial_threshold {
            config.initial_threshold = unit(v, "sim.initial_threshold")?;
        }
        if let Some(v) = self.initial_viewability {
            config.initial_viewability = unit(v, "sim.initial_viewability")?;
        }
        if let Some(v) = self.reward_exponent {
            config.reward_exponent = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorsSection {
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub minibatch: Option<usize>,
    pub l2: Option<f64>,
    pub seed: Option<u64>,
}

impl PredictorsSection {
    pub fn to_core(&self) -> TrainConfig {
        let mut config = TrainConfig::default();
        if let Some(v) = self.learning_rate {
            config.learning_rate = v;
        }
        if let Some(v) = self.epochs {
            config.epochs = v;
        }
        if let Some(v) = self.minibatch {
            config.minibatch = v;
        }
        if let Some(v) = self.l2 {
            config.l2 = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        config
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentSection {
    pub algo: Option<String>,
    pub name: Option<String>,
    pub n_actions: Option<usize>,
    pub gamma: Option<f64>,
    pub actor_lr: Option<f64>,
    pub critic_lr: Option<f64>,
    pub epochs: Option<usize>,
    pub minibatch: Option<usize>,
    pub tau: Option<f64>,
    pub policy_noise: Option<f64>,
    pub noise_clip: Option<f64>,
    pub policy_delay: Option<usize>,
    pub hidden: Option<Vec<usize>>,
    pub seed: Option<u64>,
}

impl AgentSection {
    pub fn label(&self) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        match self.algo.as_deref() {
            Some("dqn") | None => format!("dqn{}", self.n_actions.unwrap_or(10)),
            Some(other) => other.to_string(),
        }
    }

    pub fn to_core(&self) -> Result<AgentConfig, String> {
        let mut config = match self.algo.as_deref().unwrap_or("dqn") {
            "dqn" => benchmark_dqn(self.n_actions.unwrap_or(10)),
            "dqn10" => benchmark_dqn(10),
            "dqn20" => benchmark_dqn(20),
            "ddpg" => benchmark_continuous(Algo::Ddpg),
            "td3" => benchmark_continuous(Algo::Td3),
            other => return Err(format!("unknown agent algo `{other}`")),
        };
        if let Some(v) = self.n_actions {
            config.n_actions = v;
        }
        if let Some(v) = self.gamma {
            config.gamma = v;
        }
        if let Some(v) = self.actor_lr {
            config.actor_lr = v;
        }
        if let Some(v) = self.critic_lr {
            config.critic_lr = v;
        }
        if let Some(v) = self.epochs {
            config.epochs = v;
        }
        if let Some(v) = self.minibatch {
            config.minibatch = v;
        }
        if let Some(v) = self.tau {
            config.tau = v;
        }
        if let Some(v) = self.policy_noise {
            config.policy_noise = v;
        }
        if let Some(v) = self.noise_clip {
            config.noise_clip = v;
        }
        if let Some(v) = self.policy_delay {
            config.policy_delay = v;
        }
        if let Some(v) = &self.hidden {
            config.hidden = v.clone();
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PidSection {
    pub kp: Option<f64>,
    pub ki: Option<f64>,
    pub kd: Option<f64>,
    pub step_clamp: Option<f64>,
    pub integral_clamp: Option<f64>,
    pub threshold_lo: Option<f64>,
    pub threshold_hi: Option<f64>,
}

impl PidSection {
    pub fn to_core(&self) -> Result<PidConfig, String> {
        let mut config = PidConfig::default();
        if let Some(v) = self.kp {
            config.kp = v;
        }
        if let Some(v) = self.ki {
            config.ki = v;
        }
        if let Some(v) = self.kd {
            config.kd = v;
        }
        if let Some(v) = self.step_clamp {
            config.step_clamp = v;
        }
        if let Some(v) = self.integral_clamp {
            config.integral_clamp = v;
        }
        if let Some(v) = self.threshold_lo {
            config.threshold_lo = unit(v, "pid.threshold_lo")?;
        }
        if let Some(v) = self.threshold_hi {
            config.threshold_hi = unit(v, "pid.threshold_hi")?;
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BayesoptSection {
    pub budget: Option<usize>,
    pub init_points: Option<usize>,
    pub seed: Option<u64>,
    pub n_candidates: Option<usize>,
    /// Reduced budgets for the tuned-agent training during the objective.
    pub objective_rollout_episodes: Option<usize>,
    pub max_epochs: Option<usize>,
}

impl BayesoptSection {
    pub fn to_core(&self, trace_path: PathBuf) -> TuneOptions {
        let mut options = TuneOptions {
            trace_path: Some(trace_path),
            ..TuneOptions::default()
        };
        if let Some(v) = self.budget {
            options.budget = v;
        }
        if let Some(v) = self.init_points {
            options.init_points = v;
        }
        if let Some(v) = self.seed {
            options.seed = v;
        }
        if let Some(v) = self.n_candidates {
            options.n_candidates = v;
        }
        options
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResponseProcessSection {
    pub alpha_mid: Option<f64>,
    pub alpha_slope: Option<f64>,
    pub response_fraction: Option<f64>,
    pub noise: Option<f64>,
    pub initial_viewability: Option<f64>,
    pub initial_threshold: Option<f64>,
    pub goal: Option<f64>,
    pub seed: Option<u64>,
}

impl ResponseProcessSection {
    pub fn to_core(&self) -> Result<ResponseProcessConfig, String> {
        let mut config = ResponseProcessConfig::default();
        if let Some(v) = self.alpha_mid {
            config.alpha_mid = v;
        }
        if let Some(v) = self.alpha_slope {
            config.alpha_slope = v;
        }
        if let Some(v) = self.response_fraction {
            config.response_fraction = v;
        }
        if let Some(v) = self.noise {
            config.noise = v;
        }
        if let Some(v) = self.initial_viewability {
            config.initial_viewability = unit(v, "response_process.initial_viewability")?;
        }
        if let Some(v) = self.initial_threshold {
            config.initial_threshold = unit(v, "response_process.initial_threshold")?;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }

    pub fn goal(&self) -> Result<UnitInterval, String> {
        unit(self.goal.unwrap_or(0.72), "response_process.goal")
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyEnvSection {
    pub intercept: Option<f64>,
    pub slope: Option<f64>,
}

impl ToyEnvSection {
    pub fn to_core(&self) -> Result<ToyEnvConfig, String> {
        let mut config = ToyEnvConfig::default();
        if let Some(v) = self.intercept {
            config.intercept = v;
        }
        if let Some(v) = self.slope {
            config.slope = v;
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}
