//! Deterministic 2D navigation world.

pub mod episode;
pub mod geometry;
pub mod kinematics;
pub mod lidar;
pub mod sampler;
pub mod scene;
pub mod state;

pub use episode::{Episode, EpisodeLimits, Outcome, Transition};
pub use geometry::{normalize_angle, Bounds, Pose, Vec2};
pub use kinematics::{Action, StepResult};
pub use lidar::{pool, raycast, scan, LidarScan, PooledScan, MAX_RANGE, NUM_RAYS, NUM_SECTORS};
pub use sampler::{sample_scene, SamplerConfig, SamplerError};
pub use scene::{Obstacle, ObstacleId, Scene, SceneError, Shape};
pub use state::{build_state, goal_polar, Observation, StateVector, STATE_DIM};

/// Control period in seconds (10 Hz).
pub const DT: f64 = 0.1;
pub const CONTROL_HZ: f64 = 10.0;
pub const ROBOT_RADIUS: f64 = 0.2;
pub const V_MAX: f64 = 1.0;
pub const OMEGA_MAX: f64 = 1.0;
/// Normalizer for the goal distance in the state vector.
pub const GOAL_RANGE_NORM: f64 = 12.0;

/// Walls of every generated scene; leaving them counts as a collision.
pub const DEFAULT_BOUNDS: Bounds = Bounds {
    min: Vec2 { x: -5.0, y: -5.0 },
    max: Vec2 { x: 5.0, y: 5.0 },
};
