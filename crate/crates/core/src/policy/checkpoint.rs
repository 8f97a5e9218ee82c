//! JSON checkpoint: layer dims plus row-major weights.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::actor::MlpPolicy;
use super::mlp::{Activation, Dense, Mlp};
use super::PolicyError;

pub const CHECKPOINT_FORMAT: &str = "lidarxai-policy/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerBlob {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    /// Row-major `out_dim × in_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub layers: Vec<LayerBlob>,
    /// Training configuration that produced the weights, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_config: Option<serde_json::Value>,
}

impl Checkpoint {
    pub fn from_policy(policy: &MlpPolicy, train_config: Option<serde_json::Value>) -> Self {
        let layers = policy
            .network()
            .layers
            .iter()
            .map(|l| LayerBlob {
                in_dim: l.weight.ncols(),
                out_dim: l.weight.nrows(),
                activation: l.activation,
                weights: l.weight.iter().copied().collect(),
                bias: l.bias.to_vec(),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            layers,
            train_config,
        }
    }

    pub fn to_policy(&self) -> Result<MlpPolicy, PolicyError> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(PolicyError::Format(self.format.clone()));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, blob) in self.layers.iter().enumerate() {
            if blob.weights.len() != blob.in_dim * blob.out_dim || blob.bias.len() != blob.out_dim {
                return Err(PolicyError::Architecture(format!(
                    "layer {i}: {}x{} needs {} weights and {} biases, found {} and {}",
                    blob.out_dim,
                    blob.in_dim,
                    blob.in_dim * blob.out_dim,
                    blob.out_dim,
                    blob.weights.len(),
                    blob.bias.len()
                )));
            }
            layers.push(Dense {
                weight: Array2::from_shape_vec((blob.out_dim, blob.in_dim), blob.weights.clone())
                    .expect("length checked"),
                bias: Array1::from_vec(blob.bias.clone()),
                activation: blob.activation,
            });
        }
        MlpPolicy::from_network(Mlp { layers })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PolicyError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PolicyError> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

pub fn load_policy(path: impl AsRef<Path>) -> Result<MlpPolicy, PolicyError> {
    Checkpoint::load(path)?.to_policy()
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn json_round_trip_is_exact() {
        let policy = MlpPolicy::init(&mut ChaCha8Rng::seed_from_u64(3));
        let text = serde_json::to_string(&Checkpoint::from_policy(&policy, None)).unwrap();
        let back: Checkpoint = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_policy().unwrap(), policy);
    }

    #[test]
    fn truncated_weights_rejected() {
        let policy = MlpPolicy::init(&mut ChaCha8Rng::seed_from_u64(3));
        let mut ckpt = Checkpoint::from_policy(&policy, None);
        ckpt.layers[1].weights.pop();
        assert!(matches!(ckpt.to_policy(), Err(PolicyError::Architecture(_))));
    }

    #[test]
    fn wrong_format_rejected() {
        let policy = MlpPolicy::init(&mut ChaCha8Rng::seed_from_u64(3));
        let mut ckpt = Checkpoint::from_policy(&policy, None);
        ckpt.format = "lidarxai-policy/0".into();
        assert!(matches!(ckpt.to_policy(), Err(PolicyError::Format(_))));
    }

    #[test]
    fn missing_layer_rejected() {
        let policy = MlpPolicy::init(&mut ChaCha8Rng::seed_from_u64(3));
        let mut ckpt = Checkpoint::from_policy(&policy, None);
        ckpt.layers.remove(2);
        assert!(ckpt.to_policy().is_err());
    }
}
