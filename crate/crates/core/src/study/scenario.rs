use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{sample_scene, SamplerConfig, SamplerError, Scene, SceneError, Vec2};

pub const SCENARIO_SET_FORMAT: &str = "lidarxai-scenarios/1";
pub const STUDY_SCENARIOS: usize = 48;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario {index}: {source}")]
    Sampler { index: usize, source: SamplerError },
    #[error("scenario count must be positive")]
    Empty,
    #[error("unsupported scenario set format {0:?}")]
    Format(String),
    #[error("scenario {0}: {1}")]
    Invalid(u32, SceneError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: u32,
    pub scene: Scene,
}

impl Scenario {
    pub fn observer_position(&self) -> Vec2 {
        self.scene.observer_position
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub format: String,
    pub seed: u64,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let set: ScenarioSet = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if set.format != SCENARIO_SET_FORMAT {
            return Err(ScenarioError::Format(set.format));
        }
        for s in &set.scenarios {
            s.scene
                .validate(true)
                .map_err(|e| ScenarioError::Invalid(s.id, e))?;
        }
        Ok(set)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn get(&self, id: u32) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.id == id)
    }
}

/// Five-obstacle scenes with the robot facing the goal and an observer placed
/// on a ring around the scene center.
pub fn generate_scenarios(seed: u64, count: usize) -> Result<ScenarioSet, ScenarioError> {
    if count == 0 {
        return Err(ScenarioError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SamplerConfig::study();
    let scenarios = (0..count)
        .map(|index| {
            let mut scene = sample_scene(&mut rng, &cfg)
                .map_err(|source| ScenarioError::Sampler { index, source })?;
            scene.seed = Some(seed);
            scene.observer_position = Vec2::from_angle(rng.random_range(0.0..std::f64::consts::TAU)) * 4.5;
            Ok(Scenario {
                id: index as u32,
                scene,
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    Ok(ScenarioSet {
        format: SCENARIO_SET_FORMAT.to_string(),
        seed,
        scenarios,
    })
}
