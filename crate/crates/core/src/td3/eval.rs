use serde::{Deserialize, Serialize};

use super::reward::{RewardConfig, RewardTerms};
use crate::policy::MlpPolicy;
use crate::world::{Action, Episode, EpisodeLimits, Outcome, Pose, Scene, StateVector};

/// Anything that maps a state to a velocity command.
pub trait Controller {
    fn act(&self, state: &StateVector) -> Action;
}

impl Controller for MlpPolicy {
    fn act(&self, state: &StateVector) -> Action {
        MlpPolicy::act(self, state).expect("world states are finite")
    }
}

impl<F: Fn(&StateVector) -> Action> Controller for F {
    fn act(&self, state: &StateVector) -> Action {
        self(state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub outcome: Outcome,
    pub steps: usize,
    pub terms: RewardTerms,
    /// Per-step reward terms, in order.
    pub step_terms: Vec<RewardTerms>,
    pub poses: Vec<Pose>,
    pub actions: Vec<Action>,
}

impl Rollout {
    pub fn episode_return(&self) -> f64 {
        self.terms.total()
    }
}

/// Runs one noise-free episode to termination.
pub fn rollout<C: Controller + ?Sized>(
    controller: &C,
    scene: &Scene,
    limits: EpisodeLimits,
    reward: &RewardConfig,
) -> Rollout {
    let mut episode = Episode::new(scene.clone(), limits);
    let mut prev = (Action::STOP, Action::STOP);
    let mut terms = RewardTerms::default();
    let mut step_terms = Vec::new();
    let mut poses = vec![episode.pose()];
    let mut actions = Vec::new();
    loop {
        let action = controller.act(&episode.observe().state);
        let tr = episode.advance(action);
        let t = reward.terms(prev, action, tr.outcome, tr.d_min);
        terms.accumulate(&t);
        step_terms.push(t);
        poses.push(tr.pose);
        actions.push(action);
        prev = (action, prev.0);
        if tr.outcome.is_terminal() {
            return Rollout {
                outcome: tr.outcome,
                steps: episode.steps(),
                terms,
                step_terms,
                poses,
                actions,
            };
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioStats {
    pub scenario: usize,
    pub episodes: usize,
    pub goals: usize,
    pub collisions: usize,
    pub timeouts: usize,
    pub mean_return: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub episodes: usize,
    pub success_rate: f64,
    pub collision_rate: f64,
    pub timeout_rate: f64,
    pub mean_return: f64,
    pub per_scenario: Vec<ScenarioStats>,
}

/// Runs `episodes` deterministic rollouts, cycling through `scenes` in order.
pub fn evaluate_policy<C: Controller + ?Sized>(
    controller: &C,
    scenes: &[Scene],
    episodes: usize,
    limits: EpisodeLimits,
    reward: &RewardConfig,
) -> EvalReport {
    assert!(!scenes.is_empty(), "evaluation needs at least one scene");
    let mut per_scenario: Vec<ScenarioStats> = (0..scenes.len())
        .map(|scenario| ScenarioStats {
            scenario,
            ..ScenarioStats::default()
        })
        .collect();
    let mut total_return = 0.0;
    for i in 0..episodes {
        let idx = i % scenes.len();
        let r = rollout(controller, &scenes[idx], limits, reward);
        let stats = &mut per_scenario[idx];
        stats.episodes += 1;
        stats.mean_return += r.episode_return();
        match r.outcome {
            Outcome::Goal => stats.goals += 1,
            Outcome::Collision => stats.collisions += 1,
            Outcome::Timeout => stats.timeouts += 1,
            Outcome::Running => unreachable!("rollouts end in a terminal outcome"),
        }
        total_return += r.episode_return();
    }
    for s in &mut per_scenario {
        if s.episodes > 0 {
            s.mean_return /= s.episodes as f64;
        }
    }
    let rate = |f: fn(&ScenarioStats) -> usize| {
        per_scenario.iter().map(f).sum::<usize>() as f64 / episodes.max(1) as f64
    };
    EvalReport {
        episodes,
        success_rate: rate(|s| s.goals),
        collision_rate: rate(|s| s.collisions),
        timeout_rate: rate(|s| s.timeouts),
        mean_return: total_return / episodes.max(1) as f64,
        per_scenario,
    }
}
