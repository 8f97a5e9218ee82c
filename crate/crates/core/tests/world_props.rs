use std::f64::consts::PI;

use lidarxai_core::world::lidar::{ray_angle, RAYS_PER_SECTOR};
use lidarxai_core::world::{
    goal_polar, pool, raycast, sample_scene, scan, Action, Episode, EpisodeLimits, Obstacle, ObstacleId, Pose,
    SamplerConfig, Scene, Shape, Vec2, MAX_RANGE, NUM_RAYS, NUM_SECTORS,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn shape_strategy() -> impl Strategy<Value = Shape> {
    let center = (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| Vec2::new(x, y));
    prop_oneof![
        (center.clone(), 0.1..1.0f64).prop_map(|(center, radius)| Shape::Circle { center, radius }),
        (center, 0.1..1.0f64, 0.1..1.0f64).prop_map(|(center, hx, hy)| Shape::Rect {
            center,
            half_extents: Vec2::new(hx, hy),
        }),
    ]
}

/// Marches along the ray in 1e-4 m steps and reports the first point inside
/// the shape, provided the origin starts outside it.
fn march(shape: &Shape, origin: Vec2, dir: Vec2) -> f64 {
    const STEP: f64 = 1e-4;
    if shape.contains(origin) {
        return MAX_RANGE;
    }
    let steps = (MAX_RANGE / STEP) as usize;
    for i in 1..=steps {
        let t = i as f64 * STEP;
        if shape.contains(origin + dir * t) {
            return t;
        }
    }
    MAX_RANGE
}

fn single(shape: Shape) -> Scene {
    let mut scene = Scene::empty(Pose::new(Vec2::new(-4.0, -4.0), 0.0), Vec2::new(4.0, 4.0));
    scene.obstacles.push(Obstacle { id: ObstacleId(0), shape });
    scene
}

fn random_scene(seed: u64) -> (Scene, Pose) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = sample_scene(&mut rng, &SamplerConfig::training()).unwrap();
    let pose = Pose::new(
        Vec2::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)),
        rng.random_range(-PI..PI),
    );
    (scene, pose)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn raycast_matches_ray_march(
        shape in shape_strategy(),
        ox in -4.0..4.0f64,
        oy in -4.0..4.0f64,
        angle in -PI..PI,
    ) {
        let origin = Vec2::new(ox, oy);
        let dir = Vec2::from_angle(angle);
        let (d, _) = raycast(&single(shape), origin, dir);
        let oracle = march(&shape, origin, dir);
        prop_assert!((d - oracle).abs() < 1e-3, "analytic {d} vs marched {oracle}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scan_equals_individual_raycasts(seed in any::<u64>()) {
        let (scene, pose) = random_scene(seed);
        let s = scan(&scene, &pose);
        prop_assert_eq!(s.distances.len(), NUM_RAYS);
        for k in 0..NUM_RAYS {
            let angle = ray_angle(pose.heading, k);
            let (d, hit) = raycast(&scene, pose.position, Vec2::from_angle(angle));
            prop_assert_eq!(s.distances[k], d);
            prop_assert_eq!(s.hit_object[k], hit);
            prop_assert!(d > 0.0 && d <= MAX_RANGE);
            prop_assert_eq!(hit.is_none(), d == MAX_RANGE);
        }
    }

    #[test]
    fn pool_equals_brute_force_minima(seed in any::<u64>()) {
        let (scene, pose) = random_scene(seed);
        let s = scan(&scene, &pose);
        let pooled = pool(&s);
        for j in 0..NUM_SECTORS {
            let rays: Vec<usize> = (0..NUM_RAYS).filter(|k| k / RAYS_PER_SECTOR == j).collect();
            let min = rays.iter().map(|&k| s.distances[k]).fold(f64::INFINITY, f64::min);
            let first = *rays.iter().find(|&&k| s.distances[k] == min).unwrap();
            prop_assert_eq!(pooled.distances[j], min);
            prop_assert_eq!(pooled.contributing_ray[j], first);
        }
    }

    #[test]
    fn goal_polar_is_rigid_motion_invariant(
        px in -4.0..4.0f64, py in -4.0..4.0f64, heading in -PI..PI,
        gx in -4.0..4.0f64, gy in -4.0..4.0f64,
        rot in -PI..PI, tx in -2.0..2.0f64, ty in -2.0..2.0f64,
    ) {
        let pose = Pose::new(Vec2::new(px, py), heading);
        let goal = Vec2::new(gx, gy);
        let shift = Vec2::new(tx, ty);
        let moved = Pose::new(pose.position.rotate(rot) + shift, heading + rot);
        let (r0, t0) = goal_polar(&pose, goal);
        let (r1, t1) = goal_polar(&moved, goal.rotate(rot) + shift);
        prop_assert!((r0 - r1).abs() < 1e-9);
        let dt = (t0 - t1).abs();
        prop_assert!(dt < 1e-9 || (dt - 2.0 * PI).abs() < 1e-9);
        prop_assert!((-PI..PI).contains(&t0));
    }

    #[test]
    fn episodes_are_deterministic(seed in any::<u64>()) {
        let (scene, _) = random_scene(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actions: Vec<Action> = (0..100)
            .map(|_| Action { v: rng.random_range(0.0..1.0), omega: rng.random_range(-1.0..1.0) })
            .collect();
        let run = |scene: Scene| {
            let mut ep = Episode::new(scene, EpisodeLimits::default());
            let mut trace = Vec::new();
            for a in &actions {
                if ep.outcome().is_terminal() {
                    break;
                }
                trace.push(ep.advance(*a));
            }
            trace
        };
        prop_assert_eq!(run(scene.clone()), run(scene));
    }
}
