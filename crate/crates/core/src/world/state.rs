use serde::{Deserialize, Serialize};

use super::geometry::{normalize_angle, Pose, Vec2};
use super::lidar::{self, LidarScan, PooledScan, MAX_RANGE, NUM_SECTORS};
use super::scene::Scene;
use super::GOAL_RANGE_NORM;

pub const STATE_DIM: usize = NUM_SECTORS + 2;
pub const GOAL_SLICE: std::ops::Range<usize> = NUM_SECTORS..STATE_DIM;
pub const LIDAR_SLICE: std::ops::Range<usize> = 0..NUM_SECTORS;

/// Policy input `[L, G]`: 15 lidar readings scaled by the range, then the goal
/// distance scaled by [`GOAL_RANGE_NORM`] and the goal bearing divided by π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(pub [f64; STATE_DIM]);

impl StateVector {
    pub fn lidar(&self) -> &[f64] {
        &self.0[LIDAR_SLICE]
    }

    pub fn goal(&self) -> &[f64] {
        &self.0[GOAL_SLICE]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Pooled distances in meters recovered from the lidar slice.
    pub fn lidar_distances(&self) -> [f64; NUM_SECTORS] {
        std::array::from_fn(|j| self.0[j] * MAX_RANGE)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

/// Goal in robot-centric polar coordinates `(r, θ)`, `θ ∈ [-π, π)`; `θ = 0` when `r = 0`.
pub fn goal_polar(pose: &Pose, goal: Vec2) -> (f64, f64) {
    let delta = goal - pose.position;
    let r = delta.norm();
    if r == 0.0 {
        return (0.0, 0.0);
    }
    (r, normalize_angle(delta.angle() - pose.heading))
}

/// Normalized goal components `(r / 12, θ / π)`.
pub fn encode_goal(goal: (f64, f64)) -> [f64; 2] {
    [goal.0 / GOAL_RANGE_NORM, goal.1 / std::f64::consts::PI]
}

pub fn encode_state(pooled: &PooledScan, goal: (f64, f64)) -> StateVector {
    let mut s = [0.0; STATE_DIM];
    for (dst, d) in s.iter_mut().zip(pooled.distances) {
        *dst = d / MAX_RANGE;
    }
    s[GOAL_SLICE].copy_from_slice(&encode_goal(goal));
    StateVector(s)
}

/// Everything the policy and the attribution mapping need from one pose.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub state: StateVector,
    pub pooled: PooledScan,
    pub scan: LidarScan,
}

pub fn build_state(scene: &Scene, pose: &Pose) -> Observation {
    let scan = lidar::scan(scene, pose);
    let pooled = lidar::pool(&scan);
    let state = encode_state(&pooled, goal_polar(pose, scene.goal));
    Observation {
        state,
        pooled,
        scan,
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    use super::*;

    #[test]
    fn polar_diagonal() {
        let (r, th) = goal_polar(&Pose::new(Vec2::ZERO, 0.0), Vec2::new(1.0, 1.0));
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        assert!((th - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn polar_degenerate() {
        let pose = Pose::new(Vec2::new(1.0, 2.0), 0.7);
        assert_eq!(goal_polar(&pose, Vec2::new(1.0, 2.0)), (0.0, 0.0));
    }

    #[test]
    fn polar_dead_ahead() {
        let (r, th) = goal_polar(&Pose::new(Vec2::ZERO, FRAC_PI_2), Vec2::new(0.0, 2.0));
        assert_eq!(r, 2.0);
        assert!(th.abs() < 1e-15);
    }

    #[test]
    fn empty_scene_lidar_slice() {
        let scene = Scene::empty(Pose::new(Vec2::ZERO, 0.0), Vec2::new(2.0, 1.0));
        let obs = build_state(&scene, &scene.robot_start);
        assert_eq!(obs.state.as_slice().len(), STATE_DIM);
        assert!(obs.state.lidar().iter().all(|&x| x == 1.0));
        assert_eq!(obs.state.goal().len(), 2);
    }
}
