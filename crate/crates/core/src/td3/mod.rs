//! TD3 training over the navigation world with the sparse/penalty reward.

pub mod config;
pub mod eval;
pub mod replay;
pub mod reward;
pub mod trainer;

use thiserror::Error;

pub use config::{TrainConfig, FULL_SCALE_STEPS};
pub use eval::{evaluate_policy, rollout, Controller, EvalReport, Rollout};
pub use replay::ReplayBuffer;
pub use reward::{RewardConfig, RewardTerms};
pub use trainer::{sampled_scenes, train, train_with_progress, EpisodeLog, Td3, TrainLog, TrainResult, Transition};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("training diverged at step {step}: non-finite {what}")]
    Diverged { step: usize, what: &'static str },
    #[error(transparent)]
    Sampler(#[from] crate::world::SamplerError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
