//! Heuristic rankers a participant without explanations might use.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use super::trial::TrialFrame;
use crate::world::geometry::point_segment_distance;
use crate::world::{normalize_angle, ObstacleId};

/// Half-width of the forward cone used by [`Strategy::FrontCone`].
pub const FRONT_CONE_HALF_ANGLE: f64 = PI / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "seed")]
pub enum Strategy {
    /// Reads the ground truth.
    Oracle,
    /// Nearest obstacle surface to the robot first.
    Proximity,
    /// Obstacle center nearest to the start–goal segment first.
    PathProximity,
    /// Proximity among obstacles within ±60° of the heading, then the rest.
    FrontCone,
    Random(u64),
}

impl Strategy {
    pub fn parse(text: &str, seed: u64) -> Option<Self> {
        Some(match text {
            "oracle" => Strategy::Oracle,
            "proximity" => Strategy::Proximity,
            "path-proximity" => Strategy::PathProximity,
            "front-cone" => Strategy::FrontCone,
            "random" => Strategy::Random(seed),
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Oracle => "oracle",
            Strategy::Proximity => "proximity",
            Strategy::PathProximity => "path-proximity",
            Strategy::FrontCone => "front-cone",
            Strategy::Random(_) => "random",
        }
    }
}

fn sort_by_key(mut keyed: Vec<(f64, ObstacleId)>) -> Vec<ObstacleId> {
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|k| k.1).collect()
}

/// Ranks the scenario's obstacles, most important first.
pub fn baseline_rank(strategy: Strategy, scenario: &Scenario, frozen: &TrialFrame) -> Vec<ObstacleId> {
    let scene = &scenario.scene;
    let robot = frozen.pose.position;
    match strategy {
        Strategy::Oracle => frozen.importance.ground_truth_ranking.clone(),
        Strategy::Proximity => sort_by_key(
            scene
                .obstacles
                .iter()
                .map(|o| (o.shape.distance_to(robot), o.id))
                .collect(),
        ),
        Strategy::PathProximity => {
            let start = scene.robot_start.position;
            sort_by_key(
                scene
                    .obstacles
                    .iter()
                    .map(|o| (point_segment_distance(o.shape.center(), start, scene.goal), o.id))
                    .collect(),
            )
        }
        Strategy::FrontCone => {
            let (mut inside, mut outside) = (Vec::new(), Vec::new());
            for o in &scene.obstacles {
                let bearing = normalize_angle((o.shape.center() - robot).angle() - frozen.pose.heading);
                let entry = (o.shape.distance_to(robot), o.id);
                if bearing.abs() <= FRONT_CONE_HALF_ANGLE {
                    inside.push(entry);
                } else {
                    outside.push(entry);
                }
            }
            let mut order = sort_by_key(inside);
            order.extend(sort_by_key(outside));
            order
        }
        Strategy::Random(seed) => {
            let mut ids = scene.obstacle_ids();
            ids.sort();
            ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            ids
        }
    }
}
