use serde::{Deserialize, Serialize};

use super::geometry::{Pose, Vec2};
use super::scene::Scene;
use super::{OMEGA_MAX, ROBOT_RADIUS, V_MAX};

/// Velocity command: linear `v` in m/s, angular `omega` in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub v: f64,
    pub omega: f64,
}

impl Action {
    pub const STOP: Action = Action { v: 0.0, omega: 0.0 };

    /// Builds an action clamped to `[0, V_MAX] × [-OMEGA_MAX, OMEGA_MAX]`.
    pub fn clamped(v: f64, omega: f64) -> Self {
        Self {
            v: v.clamp(0.0, V_MAX),
            omega: omega.clamp(-OMEGA_MAX, OMEGA_MAX),
        }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.v, self.omega]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub pose: Pose,
    pub collision: bool,
}

/// Unicycle update: rotate first, then translate along the new heading.
pub fn integrate(pose: &Pose, action: Action, dt: f64) -> Pose {
    assert!(dt > 0.0, "dt must be positive");
    let heading = pose.heading + action.omega * dt;
    let position = pose.position + Vec2::from_angle(heading) * (action.v * dt);
    Pose::new(position, heading)
}

/// True when the robot disc at `position` overlaps an obstacle or leaves the bounds.
pub fn in_collision(scene: &Scene, position: Vec2) -> bool {
    !scene.bounds.contains_disc(position, ROBOT_RADIUS)
        || scene
            .obstacles
            .iter()
            .any(|o| o.shape.distance_to(position) < ROBOT_RADIUS)
}

pub fn step(scene: &Scene, pose: &Pose, action: Action, dt: f64) -> StepResult {
    let pose = integrate(pose, action, dt);
    StepResult {
        collision: in_collision(scene, pose.position),
        pose,
    }
}
