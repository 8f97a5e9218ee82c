//! From-scratch MLP actor: forward pass, parameter gradients and input gradients.

pub mod actor;
pub mod checkpoint;
pub mod mlp;

use thiserror::Error;

pub use actor::{actor_specs, critic_specs, MlpPolicy, OutputHead, PolicyOutput};
pub use checkpoint::{load_policy, Checkpoint, CHECKPOINT_FORMAT};
pub use mlp::{Activation, Adam, Dense, LayerSpec, Mlp};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("policy input contains a non-finite value")]
    NonFiniteInput,
    #[error("network parameters contain non-finite values")]
    NonFiniteParameters,
    #[error("architecture mismatch: {0}")]
    Architecture(String),
    #[error("unsupported checkpoint format {0:?}")]
    Format(String),
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint json: {0}")]
    Json(#[from] serde_json::Error),
}
