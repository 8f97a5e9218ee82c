//! Analytic 2D lidar: exact ray/primitive intersection, full 360-ray scans and
//! sector min-pooling.
//!
//! Rays only register entering intersections: an obstacle that contains the
//! ray origin is invisible to that ray, as with one-sided collider raycasts.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::geometry::{Pose, Vec2};
use super::scene::{ObstacleId, Scene, Shape};

/// Detection range in meters. A ray that hits nothing reports exactly this.
pub const MAX_RANGE: f64 = 6.0;
pub const NUM_RAYS: usize = 360;
pub const NUM_SECTORS: usize = 15;
pub const RAYS_PER_SECTOR: usize = NUM_RAYS / NUM_SECTORS;

/// Entry distance of the ray `origin + t·dir` into `shape`, if any with `t > 0`.
pub fn intersect(shape: &Shape, origin: Vec2, dir: Vec2) -> Option<f64> {
    match *shape {
        Shape::Circle { center, radius } => {
            let oc = origin - center;
            let c = oc.norm_sq() - radius * radius;
            if c <= 0.0 {
                return None;
            }
            let b = dir.dot(oc);
            let disc = b * b - c;
            if disc < 0.0 {
                return None;
            }
            let t = -b - disc.sqrt();
            (t > 0.0).then_some(t)
        }
        Shape::Rect {
            center,
            half_extents,
        } => {
            let min = center - half_extents;
            let max = center + half_extents;
            let mut t_near = f64::NEG_INFINITY;
            let mut t_far = f64::INFINITY;
            for (o, d, lo, hi) in [
                (origin.x, dir.x, min.x, max.x),
                (origin.y, dir.y, min.y, max.y),
            ] {
                if d == 0.0 {
                    if o < lo || o > hi {
                        return None;
                    }
                } else {
                    let t1 = (lo - o) / d;
                    let t2 = (hi - o) / d;
                    t_near = t_near.max(t1.min(t2));
                    t_far = t_far.min(t1.max(t2));
                }
            }
            (t_near <= t_far && t_near > 0.0).then_some(t_near)
        }
    }
}

/// Nearest hit along a unit-length ray, capped at [`MAX_RANGE`].
///
/// Returns `(MAX_RANGE, None)` when nothing is hit closer than the range.
/// Equal distances resolve to the obstacle listed first in the scene.
pub fn raycast(scene: &Scene, origin: Vec2, dir: Vec2) -> (f64, Option<ObstacleId>) {
    debug_assert!(
        (dir.norm() - 1.0).abs() < 1e-9,
        "raycast direction must be unit length"
    );
    let mut best = (MAX_RANGE, None);
    for obstacle in &scene.obstacles {
        if let Some(t) = intersect(&obstacle.shape, origin, dir) {
            if t < best.0 {
                best = (t, Some(obstacle.id));
            }
        }
    }
    best
}

/// Direction of ray `k` for a robot facing `heading`.
pub fn ray_angle(heading: f64, k: usize) -> f64 {
    heading + k as f64 * (TAU / NUM_RAYS as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarScan {
    pub distances: Vec<f64>,
    pub hit_object: Vec<Option<ObstacleId>>,
}

impl LidarScan {
    /// World-space end point of ray `k` when cast from `pose`.
    pub fn endpoint(&self, pose: &Pose, k: usize) -> Vec2 {
        pose.position + Vec2::from_angle(ray_angle(pose.heading, k)) * self.distances[k]
    }
}

/// Full scan; ray 0 points along the heading, rays proceed counterclockwise.
pub fn scan(scene: &Scene, pose: &Pose) -> LidarScan {
    let mut distances = Vec::with_capacity(NUM_RAYS);
    let mut hit_object = Vec::with_capacity(NUM_RAYS);
    for k in 0..NUM_RAYS {
        let dir = Vec2::from_angle(ray_angle(pose.heading, k));
        let (d, hit) = raycast(scene, pose.position, dir);
        distances.push(d);
        hit_object.push(hit);
    }
    LidarScan {
        distances,
        hit_object,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledScan {
    pub distances: [f64; NUM_SECTORS],
    /// Raw ray index that produced each sector's minimum.
    pub contributing_ray: [usize; NUM_SECTORS],
}

/// Sector `j` covers rays `24j ..= 24j + 23`; ties go to the lowest ray index.
pub fn pool(scan: &LidarScan) -> PooledScan {
    assert_eq!(scan.distances.len(), NUM_RAYS, "pool expects {NUM_RAYS} rays");
    let mut distances = [MAX_RANGE; NUM_SECTORS];
    let mut contributing_ray = [0; NUM_SECTORS];
    for sector in 0..NUM_SECTORS {
        let start = sector * RAYS_PER_SECTOR;
        let mut best = start;
        for k in start + 1..start + RAYS_PER_SECTOR {
            if scan.distances[k] < scan.distances[best] {
                best = k;
            }
        }
        distances[sector] = scan.distances[best];
        contributing_ray[sector] = best;
    }
    PooledScan {
        distances,
        contributing_ray,
    }
}
