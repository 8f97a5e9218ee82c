use serde::{Deserialize, Serialize};

use super::geometry::Pose;
use super::kinematics::{self, Action};
use super::scene::Scene;
use super::state::{build_state, Observation};
use super::DT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLimits {
    pub max_steps: usize,
    pub goal_radius: f64,
}

impl Default for EpisodeLimits {
    fn default() -> Self {
        Self {
            max_steps: 300,
            goal_radius: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Running,
    Goal,
    Collision,
    Timeout,
}

impl Outcome {
    pub fn is_terminal(self) -> bool {
        self != Outcome::Running
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Running => "running",
            Outcome::Goal => "goal",
            Outcome::Collision => "collision",
            Outcome::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub pose: Pose,
    pub outcome: Outcome,
    /// Distance from the robot center to the nearest obstacle surface.
    pub d_min: f64,
}

/// One navigation episode. Collision takes precedence over reaching the goal,
/// and the step limit only applies when neither happened.
#[derive(Debug, Clone)]
pub struct Episode {
    pub scene: Scene,
    pub limits: EpisodeLimits,
    pose: Pose,
    steps: usize,
    outcome: Outcome,
}

impl Episode {
    pub fn new(scene: Scene, limits: EpisodeLimits) -> Self {
        Self {
            pose: scene.robot_start,
            scene,
            limits,
            steps: 0,
            outcome: Outcome::Running,
        }
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    pub fn observe(&self) -> Observation {
        build_state(&self.scene, &self.pose)
    }

    pub fn advance(&mut self, action: Action) -> Transition {
        assert!(!self.outcome.is_terminal(), "episode already finished");
        let result = kinematics::step(&self.scene, &self.pose, action, DT);
        self.pose = result.pose;
        self.steps += 1;
        self.outcome = if result.collision {
            Outcome::Collision
        } else if self.pose.position.distance(self.scene.goal) <= self.limits.goal_radius {
            Outcome::Goal
        } else if self.steps >= self.limits.max_steps {
            Outcome::Timeout
        } else {
            Outcome::Running
        };
        Transition {
            pose: self.pose,
            outcome: self.outcome,
            d_min: self.scene.nearest_obstacle_distance(self.pose.position),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::geometry::Vec2;

    #[test]
    fn reaches_goal_ahead() {
        let scene = Scene::empty(Pose::new(Vec2::ZERO, 0.0), Vec2::new(1.0, 0.0));
        let mut ep = Episode::new(scene, EpisodeLimits::default());
        let mut n = 0;
        while !ep.outcome().is_terminal() {
            ep.advance(Action { v: 1.0, omega: 0.0 });
            n += 1;
        }
        assert_eq!(ep.outcome(), Outcome::Goal);
        assert_eq!(n, 8);
    }

    #[test]
    fn standing_still_times_out() {
        let scene = Scene::empty(Pose::new(Vec2::ZERO, 0.0), Vec2::new(1.0, 0.0));
        let mut ep = Episode::new(scene, EpisodeLimits::default());
        while !ep.outcome().is_terminal() {
            ep.advance(Action::STOP);
        }
        assert_eq!(ep.outcome(), Outcome::Timeout);
        assert_eq!(ep.steps(), 300);
    }
}
