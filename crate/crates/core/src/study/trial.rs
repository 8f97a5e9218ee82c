use serde::{Deserialize, Serialize};

use super::kendall::{kendall_tau, KendallError, TieMode};
use super::plan::Condition;
use super::scenario::Scenario;
use crate::attribution::{attribution_frame, ObjectImportance, PooledRay, RawAttribution};
use crate::policy::{MlpPolicy, PolicyError};
use crate::world::{Action, Episode, EpisodeLimits, LidarScan, ObstacleId, Outcome, Pose, NUM_SECTORS};

/// Control ticks the robot drives before pausing (3 s at 10 Hz).
pub const TRIAL_TICKS: usize = 30;
/// Ticks the final visualization stays up after the pause (1 s).
pub const LINGER_TICKS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFrame {
    pub tick: usize,
    /// Pose the frame was computed at, before `action` is applied.
    pub pose: Pose,
    pub action: Action,
    pub scan: LidarScan,
    pub raw: RawAttribution,
    pub g_star: [f64; NUM_SECTORS],
    pub pooled_rays: [PooledRay; NUM_SECTORS],
    pub importance: ObjectImportance,
    pub outline_widths: Vec<(ObstacleId, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scenario_id: u32,
    pub condition: Condition,
    pub frames: Vec<TrialFrame>,
    /// `Running` when the window ended without a terminal event.
    pub outcome: Outcome,
    pub ranking: Option<Vec<ObstacleId>>,
    pub tau: Option<f64>,
}

impl TrialRecord {
    /// Frame the ranking is judged against: the last tick of the window.
    pub fn frozen(&self) -> &TrialFrame {
        self.frames.last().expect("trials have at least one frame")
    }

    pub fn ground_truth(&self) -> &ObjectImportance {
        &self.frozen().importance
    }

    /// Scores and stores a ranking; a later call replaces an earlier one.
    pub fn submit(&mut self, ranking: Vec<ObstacleId>, mode: TieMode) -> Result<f64, KendallError> {
        let tau = kendall_tau(&ranking, self.ground_truth(), mode)?;
        self.ranking = Some(ranking);
        self.tau = Some(tau);
        Ok(tau)
    }
}

/// Drives the policy for up to [`TRIAL_TICKS`] ticks, stopping early on goal or
/// collision, and computes an attribution frame every tick. The condition is
/// only recorded; it does not influence any computed value.
pub fn run_trial(
    policy: &MlpPolicy,
    scenario: &Scenario,
    condition: Condition,
) -> Result<TrialRecord, PolicyError> {
    let mut episode = Episode::new(scenario.scene.clone(), EpisodeLimits::default());
    let mut frames = Vec::with_capacity(TRIAL_TICKS);
    let mut outcome = Outcome::Running;
    for tick in 0..TRIAL_TICKS {
        let pose = episode.pose();
        let frame = attribution_frame(policy, &scenario.scene, &pose)?;
        let action = policy.act(&frame.observation.state)?;
        frames.push(TrialFrame {
            tick,
            pose,
            action,
            scan: frame.observation.scan,
            raw: frame.raw,
            g_star: frame.processed.g_star,
            pooled_rays: frame.pooled_rays,
            importance: frame.importance,
            outline_widths: frame.outline_widths,
        });
        let tr = episode.advance(action);
        if tr.outcome.is_terminal() {
            outcome = tr.outcome;
            break;
        }
    }
    Ok(TrialRecord {
        scenario_id: scenario.id,
        condition,
        frames,
        outcome,
        ranking: None,
        tau: None,
    })
}
