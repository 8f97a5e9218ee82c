use ndarray::{Array1, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{layer_chain, Activation, LayerSpec, Mlp};
use super::PolicyError;
use crate::world::{Action, StateVector, OMEGA_MAX, STATE_DIM, V_MAX};

pub const HIDDEN: [usize; 3] = [256, 128, 64];
pub const ACTION_DIM: usize = 2;

/// Actor architecture `17 → 256 → 128 → 64 → 2`, ReLU hidden layers, tanh output.
pub fn actor_specs() -> Vec<LayerSpec> {
    layer_chain(STATE_DIM, &HIDDEN, ACTION_DIM, Activation::Tanh)
}

/// Critic architecture `19 → 256 → 128 → 64 → 1` over state ⊕ normalized action.
pub fn critic_specs() -> Vec<LayerSpec> {
    layer_chain(STATE_DIM + ACTION_DIM, &HIDDEN, 1, Activation::Identity)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputHead {
    V,
    Omega,
}

impl OutputHead {
    pub fn index(self) -> usize {
        match self {
            OutputHead::V => 0,
            OutputHead::Omega => 1,
        }
    }
}

/// Maps tanh outputs in `[-1, 1]` to velocity commands before clamping.
pub fn scale_action(u: [f64; 2]) -> [f64; 2] {
    [(u[0] + 1.0) * 0.5 * V_MAX, u[1] * OMEGA_MAX]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyOutput {
    /// Network output after tanh, in `[-1, 1]`.
    pub normalized: [f64; 2],
    /// Scaled velocities before clamping.
    pub pre_clamp: [f64; 2],
    pub action: Action,
}

/// Deterministic navigation actor.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpPolicy {
    net: Mlp<f64>,
}

impl MlpPolicy {
    /// Fresh actor with fan-in uniform init and the output layer shrunk by 1e-2.
    pub fn init<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut net = Mlp::new(&actor_specs(), rng);
        let last = net.layers.last_mut().expect("layers");
        last.weight.mapv_inplace(|w| w * 1e-2);
        last.bias.mapv_inplace(|b| b * 1e-2);
        Self { net }
    }

    pub fn from_network(net: Mlp<f64>) -> Result<Self, PolicyError> {
        let specs = net.specs();
        if specs != actor_specs() {
            return Err(PolicyError::Architecture(format!(
                "expected 17-256-128-64-2 relu/tanh actor, got {}",
                describe(&specs)
            )));
        }
        if !net.is_finite() {
            return Err(PolicyError::NonFiniteParameters);
        }
        Ok(Self { net })
    }

    pub fn network(&self) -> &Mlp<f64> {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Mlp<f64> {
        &mut self.net
    }

    pub fn forward(&self, state: &StateVector) -> Result<PolicyOutput, PolicyError> {
        if !state.is_finite() {
            return Err(PolicyError::NonFiniteInput);
        }
        let out = self.net.predict_one(ArrayView1::from(state.as_slice()));
        let normalized = [out[0], out[1]];
        let pre_clamp = scale_action(normalized);
        Ok(PolicyOutput {
            normalized,
            pre_clamp,
            action: Action::clamped(pre_clamp[0], pre_clamp[1]),
        })
    }

    pub fn act(&self, state: &StateVector) -> Result<Action, PolicyError> {
        self.forward(state).map(|o| o.action)
    }

    /// Exact ∂(pre-clamp head)/∂state: backprop through the tanh output and the
    /// affine velocity scaling.
    pub fn input_gradient(
        &self,
        state: &StateVector,
        head: OutputHead,
    ) -> Result<[f64; STATE_DIM], PolicyError> {
        if !state.is_finite() {
            return Err(PolicyError::NonFiniteInput);
        }
        let scale = match head {
            OutputHead::V => 0.5 * V_MAX,
            OutputHead::Omega => OMEGA_MAX,
        };
        let g: Array1<f64> = self
            .net
            .input_gradient(ArrayView1::from(state.as_slice()), head.index());
        Ok(std::array::from_fn(|i| g[i] * scale))
    }
}

pub(crate) fn describe(specs: &[LayerSpec]) -> String {
    let mut parts: Vec<String> = specs.first().map(|s| s.in_dim.to_string()).into_iter().collect();
    parts.extend(specs.iter().map(|s| format!("{}({:?})", s.out_dim, s.activation)));
    parts.join("-")
}
