use lidarxai_core::td3::{evaluate_policy, train, TrainConfig, TrainError};
use lidarxai_core::world::{Pose, Scene, Vec2};
use rand_chacha::ChaCha8Rng;

fn goal_ahead(_: &mut ChaCha8Rng, _: usize) -> Result<Scene, TrainError> {
    Ok(Scene::empty(Pose::new(Vec2::ZERO, 0.0), Vec2::new(1.0, 0.0)))
}

#[test]
fn learns_to_reach_a_goal_dead_ahead() {
    let cfg = TrainConfig {
        total_steps: 8_000,
        learning_starts: 2_000,
        ..TrainConfig::default()
    };
    let result = train(&cfg, goal_ahead).unwrap();
    let scene = goal_ahead(&mut rand::SeedableRng::seed_from_u64(0), 0).unwrap();
    let report = evaluate_policy(&result.policy, &[scene], 100, cfg.limits, &cfg.reward);
    assert!(report.success_rate >= 0.9, "goal rate {}", report.success_rate);
}
