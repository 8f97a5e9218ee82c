use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::geometry::{Bounds, Pose, Vec2};

/// Format tag written into every scene file.
pub const SCENE_FORMAT: &str = "lidarxai-scene/1";

/// Number of obstacles in every study scene.
pub const STUDY_OBSTACLES: usize = 5;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("obstacle id {0} appears more than once")]
    DuplicateId(ObstacleId),
    #[error("obstacle {0} has a non-positive or non-finite extent")]
    BadExtent(ObstacleId),
    #[error("{0} lies inside obstacle {1}")]
    InsideObstacle(&'static str, ObstacleId),
    #[error("{0} is outside the scene bounds")]
    OutOfBounds(&'static str),
    #[error("study scenes need exactly {STUDY_OBSTACLES} obstacles, found {0}")]
    ObstacleCount(usize),
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
    #[error("unsupported scene format {0:?}")]
    Format(String),
    #[error("scene io: {0}")]
    Io(#[from] std::io::Error),
    #[error("scene json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObstacleId(pub u32);

impl fmt::Display for ObstacleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Rect { center: Vec2, half_extents: Vec2 },
    Circle { center: Vec2, radius: f64 },
}

impl Shape {
    pub fn center(&self) -> Vec2 {
        match *self {
            Shape::Rect { center, .. } | Shape::Circle { center, .. } => center,
        }
    }

    /// Euclidean distance from `p` to the shape, zero inside.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        match *self {
            Shape::Circle { center, radius } => (p.distance(center) - radius).max(0.0),
            Shape::Rect {
                center,
                half_extents,
            } => {
                let dx = ((p.x - center.x).abs() - half_extents.x).max(0.0);
                let dy = ((p.y - center.y).abs() - half_extents.y).max(0.0);
                dx.hypot(dy)
            }
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match *self {
            Shape::Circle { center, radius } => p.distance(center) < radius,
            Shape::Rect {
                center,
                half_extents,
            } => {
                (p.x - center.x).abs() < half_extents.x && (p.y - center.y).abs() < half_extents.y
            }
        }
    }

    /// Radius of the smallest circle around the center enclosing the shape.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Shape::Circle { radius, .. } => radius,
            Shape::Rect { half_extents, .. } => half_extents.norm(),
        }
    }

    fn extents_valid(&self) -> bool {
        match *self {
            Shape::Circle { center, radius } => center.is_finite() && radius.is_finite() && radius > 0.0,
            Shape::Rect {
                center,
                half_extents,
            } => {
                center.is_finite()
                    && half_extents.is_finite()
                    && half_extents.x > 0.0
                    && half_extents.y > 0.0
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: ObstacleId,
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub format: String,
    pub obstacles: Vec<Obstacle>,
    pub goal: Vec2,
    pub robot_start: Pose,
    pub bounds: Bounds,
    /// Where a human observer stands; display metadata only.
    #[serde(default)]
    pub observer_position: Vec2,
    /// Seed the scene was sampled from, when it was sampled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Scene {
    pub fn new(obstacles: Vec<Obstacle>, goal: Vec2, robot_start: Pose, bounds: Bounds) -> Self {
        Self {
            format: SCENE_FORMAT.to_string(),
            obstacles,
            goal,
            robot_start,
            bounds,
            observer_position: Vec2::ZERO,
            seed: None,
        }
    }

    /// A scene without obstacles in the default bounds.
    pub fn empty(robot_start: Pose, goal: Vec2) -> Self {
        Self::new(Vec::new(), goal, robot_start, super::DEFAULT_BOUNDS)
    }

    pub fn obstacle(&self, id: ObstacleId) -> Option<&Obstacle> {
        self.obstacles.iter().find(|o| o.id == id)
    }

    pub fn obstacle_ids(&self) -> Vec<ObstacleId> {
        self.obstacles.iter().map(|o| o.id).collect()
    }

    /// Distance from `p` to the nearest obstacle surface, `f64::INFINITY` for an empty scene.
    pub fn nearest_obstacle_distance(&self, p: Vec2) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.shape.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks structural invariants. `study` additionally requires the fixed obstacle count.
    pub fn validate(&self, study: bool) -> Result<(), SceneError> {
        if self.format != SCENE_FORMAT {
            return Err(SceneError::Format(self.format.clone()));
        }
        let mut seen = HashSet::new();
        for o in &self.obstacles {
            if !seen.insert(o.id) {
                return Err(SceneError::DuplicateId(o.id));
            }
            if !o.shape.extents_valid() {
                return Err(SceneError::BadExtent(o.id));
            }
        }
        if !self.goal.is_finite() {
            return Err(SceneError::NonFinite("goal"));
        }
        if !self.robot_start.position.is_finite() || !self.robot_start.heading.is_finite() {
            return Err(SceneError::NonFinite("robot start"));
        }
        if !self.bounds.contains(self.goal) {
            return Err(SceneError::OutOfBounds("goal"));
        }
        if !self.bounds.contains(self.robot_start.position) {
            return Err(SceneError::OutOfBounds("robot start"));
        }
        for o in &self.obstacles {
            if o.shape.contains(self.robot_start.position) {
                return Err(SceneError::InsideObstacle("robot start", o.id));
            }
            if o.shape.contains(self.goal) {
                return Err(SceneError::InsideObstacle("goal", o.id));
            }
        }
        if study && self.obstacles.len() != STUDY_OBSTACLES {
            return Err(SceneError::ObstacleCount(self.obstacles.len()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let scene: Scene = serde_json::from_str(text)?;
        scene.validate(false)?;
        Ok(scene)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SceneError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SceneError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
