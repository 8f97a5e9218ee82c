use std::path::Path;

use serde::{Deserialize, Serialize};

use super::reward::RewardConfig;
use super::TrainError;
use crate::world::{EpisodeLimits, SamplerConfig};

/// Everything that determines a training run. Serialized into checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub total_steps: usize,
    /// Uniform random actions are taken before this many steps.
    pub learning_starts: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub discount: f64,
    /// Polyak rate for the target networks.
    pub tau: f64,
    pub policy_delay: usize,
    pub exploration_noise: f64,
    pub smoothing_noise: f64,
    pub smoothing_clip: f64,
    /// Extra relabeled copies stored per transition, with goals drawn from
    /// positions reached later in the episode; 0 disables relabeling.
    pub hindsight_goals: usize,
    /// Steps over which the largest start-goal distance grows linearly from
    /// `curriculum_start_distance` to `sampler.max_start_goal`; 0 disables.
    pub curriculum_steps: usize,
    pub curriculum_start_distance: f64,
    /// Weight of the mean squared pre-tanh actor output added to the actor loss;
    /// keeps the output heads out of saturation, where their gradient vanishes.
    pub actor_preactivation_penalty: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub seed: u64,
    pub reward: RewardConfig,
    pub limits: EpisodeLimits,
    pub sampler: SamplerConfig,
}

/// Step count of the full-length run.
pub const FULL_SCALE_STEPS: usize = 500_000;

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            total_steps: 100_000,
            learning_starts: 5_000,
            batch_size: 128,
            buffer_capacity: 1_000_000,
            discount: 0.99,
            tau: 5e-3,
            policy_delay: 2,
            exploration_noise: 0.1,
            smoothing_noise: 0.2,
            smoothing_clip: 0.5,
            hindsight_goals: 0,
            curriculum_steps: 50_000,
            curriculum_start_distance: 2.0,
            actor_preactivation_penalty: 1e-2,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            seed: 0,
            reward: RewardConfig::default(),
            limits: EpisodeLimits::default(),
            sampler: SamplerConfig::training(),
        }
    }
}

impl TrainConfig {
    /// Sampler in effect at global step `step` of a run.
    pub fn sampler_at(&self, step: usize) -> SamplerConfig {
        let mut sampler = self.sampler.clone();
        if self.curriculum_steps > 0 && step < self.curriculum_steps {
            let frac = step as f64 / self.curriculum_steps as f64;
            let start = self.curriculum_start_distance.min(sampler.max_start_goal);
            sampler.max_start_goal = start + frac * (sampler.max_start_goal - start);
        }
        sampler
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let positive = [
            ("batch_size", self.batch_size as f64),
            ("buffer_capacity", self.buffer_capacity as f64),
            ("discount", self.discount),
            ("tau", self.tau),
            ("policy_delay", self.policy_delay as f64),
            ("smoothing_clip", self.smoothing_clip),
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("max_steps", self.limits.max_steps as f64),
            ("goal_radius", self.limits.goal_radius),
            ("j_max", self.reward.j_max),
            ("control_hz", self.reward.control_hz),
            ("proximity_threshold", self.reward.proximity_threshold),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(TrainError::Config(format!("{name} must be positive, got {value}")));
            }
        }
        let non_negative = [
            ("exploration_noise", self.exploration_noise),
            ("smoothing_noise", self.smoothing_noise),
            ("actor_preactivation_penalty", self.actor_preactivation_penalty),
        ];
        for (name, value) in non_negative {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(TrainError::Config(format!("{name} must be non-negative, got {value}")));
            }
        }
        if !(self.curriculum_start_distance >= self.sampler.min_start_goal && self.curriculum_start_distance.is_finite()) {
            return Err(TrainError::Config(format!(
                "curriculum_start_distance must be at least sampler.min_start_goal ({}), got {}",
                self.sampler.min_start_goal, self.curriculum_start_distance
            )));
        }
        if self.discount > 1.0 || self.tau > 1.0 {
            return Err(TrainError::Config("discount and tau must be at most 1".into()));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TrainError> {
        let cfg: TrainConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: TrainConfig = serde_json::from_str(r#"{"total_steps": 10, "seed": 4}"#).unwrap();
        assert_eq!(cfg.total_steps, 10);
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.policy_delay, 2);
    }

    #[test]
    fn curriculum_grows_start_goal_distance() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.sampler_at(0).max_start_goal, 2.0);
        assert_eq!(cfg.sampler_at(25_000).max_start_goal, 4.5);
        assert_eq!(cfg.sampler_at(50_000), cfg.sampler);
        let off = TrainConfig {
            curriculum_steps: 0,
            ..TrainConfig::default()
        };
        assert_eq!(off.sampler_at(0), off.sampler);
    }

    #[test]
    fn rejects_zero_batch() {
        let cfg = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(TrainError::Config(_))));
    }
}
