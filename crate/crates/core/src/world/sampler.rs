//! Seeded rejection sampler for random navigation scenes.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::geometry::{Bounds, Pose, Vec2};
use super::scene::{Obstacle, ObstacleId, Scene, Shape};
use super::{DEFAULT_BOUNDS, ROBOT_RADIUS};

#[derive(Debug, Error)]
#[error("no valid scene after {attempts} attempts")]
pub struct SamplerError {
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub min_obstacles: usize,
    pub max_obstacles: usize,
    /// Region that start, goal and obstacle centers are drawn from.
    pub region: Bounds,
    pub bounds: Bounds,
    pub min_start_goal: f64,
    pub max_start_goal: f64,
    /// Minimum gap between an obstacle surface and the start or goal.
    pub clearance: f64,
    /// Minimum gap between the bounding circles of two obstacles.
    pub obstacle_gap: f64,
    pub circle_radius: (f64, f64),
    pub rect_half_extent: (f64, f64),
    /// Start heading is the goal bearing plus a uniform offset in `±heading_noise`.
    pub heading_noise: f64,
    pub max_attempts: usize,
}

impl SamplerConfig {
    /// Randomized training scenes with 3–6 obstacles.
    pub fn training() -> Self {
        Self {
            min_obstacles: 3,
            max_obstacles: 6,
            region: Bounds::centered(3.5, 3.5),
            bounds: DEFAULT_BOUNDS,
            min_start_goal: 1.0,
            max_start_goal: 7.0,
            clearance: 0.5,
            obstacle_gap: 0.1,
            circle_radius: (0.2, 0.5),
            rect_half_extent: (0.15, 0.6),
            heading_noise: std::f64::consts::FRAC_PI_2,
            max_attempts: 10_000,
        }
    }

    /// Study scenes: exactly five obstacles, robot facing the goal.
    pub fn study() -> Self {
        Self {
            min_obstacles: 5,
            max_obstacles: 5,
            min_start_goal: 2.0,
            heading_noise: 0.0,
            ..Self::training()
        }
    }
}

fn sample_shape<R: Rng + ?Sized>(rng: &mut R, cfg: &SamplerConfig) -> Shape {
    let center = Vec2::new(
        rng.random_range(cfg.region.min.x..=cfg.region.max.x),
        rng.random_range(cfg.region.min.y..=cfg.region.max.y),
    );
    if rng.random_bool(0.5) {
        Shape::Circle {
            center,
            radius: rng.random_range(cfg.circle_radius.0..=cfg.circle_radius.1),
        }
    } else {
        let (lo, hi) = cfg.rect_half_extent;
        Shape::Rect {
            center,
            half_extents: Vec2::new(rng.random_range(lo..=hi), rng.random_range(lo..=hi)),
        }
    }
}

fn point_in<R: Rng + ?Sized>(rng: &mut R, region: &Bounds) -> Vec2 {
    Vec2::new(
        rng.random_range(region.min.x..=region.max.x),
        rng.random_range(region.min.y..=region.max.y),
    )
}

/// Draws one scene. Obstacle ids are `0..n` in placement order.
pub fn sample_scene<R: Rng + ?Sized>(rng: &mut R, cfg: &SamplerConfig) -> Result<Scene, SamplerError> {
    for _ in 0..cfg.max_attempts {
        let start = point_in(rng, &cfg.region);
        let goal = point_in(rng, &cfg.region);
        let d = start.distance(goal);
        if d < cfg.min_start_goal || d > cfg.max_start_goal {
            continue;
        }
        let n = rng.random_range(cfg.min_obstacles..=cfg.max_obstacles);
        let mut obstacles: Vec<Obstacle> = Vec::with_capacity(n);
        let mut placed_all = true;
        for id in 0..n {
            let mut placed = false;
            for _ in 0..200 {
                let shape = sample_shape(rng, cfg);
                let clear_of_points = shape.distance_to(start) >= cfg.clearance + ROBOT_RADIUS
                    && shape.distance_to(goal) >= cfg.clearance;
                let clear_of_others = obstacles.iter().all(|o| {
                    o.shape.center().distance(shape.center())
                        >= o.shape.bounding_radius() + shape.bounding_radius() + cfg.obstacle_gap
                });
                if clear_of_points && clear_of_others {
                    obstacles.push(Obstacle {
                        id: ObstacleId(id as u32),
                        shape,
                    });
                    placed = true;
                    break;
                }
            }
            if !placed {
                placed_all = false;
                break;
            }
        }
        if !placed_all {
            continue;
        }
        let bearing = (goal - start).angle();
        let offset = if cfg.heading_noise > 0.0 {
            rng.random_range(-cfg.heading_noise..=cfg.heading_noise)
        } else {
            0.0
        };
        let scene = Scene::new(obstacles, goal, Pose::new(start, bearing + offset), cfg.bounds);
        debug_assert!(scene.validate(false).is_ok());
        return Ok(scene);
    }
    Err(SamplerError {
        attempts: cfg.max_attempts,
    })
}
