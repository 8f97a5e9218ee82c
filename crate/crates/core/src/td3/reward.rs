use serde::{Deserialize, Serialize};

use crate::world::{Action, Outcome, CONTROL_HZ};

/// Reward terms and constants, including the jerk normalizer `j_max` and the
/// control frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub goal_reward: f64,
    pub collision_penalty: f64,
    pub timeout_penalty: f64,
    pub jerk_coeff: f64,
    pub time_penalty: f64,
    pub proximity_penalty: f64,
    pub proximity_threshold: f64,
    pub j_max: f64,
    pub control_hz: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            goal_reward: 20.0,
            collision_penalty: -20.0,
            timeout_penalty: -1.0,
            jerk_coeff: 1e-7,
            time_penalty: -0.001,
            proximity_penalty: -0.001,
            proximity_threshold: 0.4,
            j_max: 1.0,
            control_hz: CONTROL_HZ,
        }
    }
}

/// Per-term contributions of one step's reward.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardTerms {
    pub goal: f64,
    pub collision: f64,
    pub timeout: f64,
    pub jerk: f64,
    pub time: f64,
    pub proximity: f64,
}

impl RewardTerms {
    pub fn total(&self) -> f64 {
        self.goal + self.collision + self.timeout + self.jerk + self.time + self.proximity
    }

    pub fn accumulate(&mut self, other: &RewardTerms) {
        self.goal += other.goal;
        self.collision += other.collision;
        self.timeout += other.timeout;
        self.jerk += other.jerk;
        self.time += other.time;
        self.proximity += other.proximity;
    }
}

impl RewardConfig {
    /// `‖(a_t − 2a_{t−1} + a_{t−2})·f²‖²`.
    pub fn jerk_norm_sq(&self, current: Action, prev: Action, prev2: Action) -> f64 {
        let f2 = self.control_hz * self.control_hz;
        let jv = (current.v - 2.0 * prev.v + prev2.v) * f2;
        let jw = (current.omega - 2.0 * prev.omega + prev2.omega) * f2;
        jv * jv + jw * jw
    }

    /// Reward for taking `current` after `(prev, prev2)` and landing in `outcome`.
    pub fn terms(
        &self,
        (prev, prev2): (Action, Action),
        current: Action,
        outcome: Outcome,
        d_min: f64,
    ) -> RewardTerms {
        debug_assert!(d_min >= 0.0);
        let mut terms = RewardTerms {
            jerk: -self.jerk_coeff * self.jerk_norm_sq(current, prev, prev2) / self.j_max,
            time: self.time_penalty,
            ..RewardTerms::default()
        };
        if d_min < self.proximity_threshold {
            terms.proximity = self.proximity_penalty;
        }
        match outcome {
            Outcome::Goal => terms.goal = self.goal_reward,
            Outcome::Collision => terms.collision = self.collision_penalty,
            Outcome::Timeout => terms.timeout = self.timeout_penalty,
            Outcome::Running => {}
        }
        terms
    }

    pub fn reward(&self, prev: (Action, Action), current: Action, outcome: Outcome, d_min: f64) -> f64 {
        self.terms(prev, current, outcome, d_min).total()
    }
}
