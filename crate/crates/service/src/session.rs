use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use lidarxai_core::policy::MlpPolicy;
use lidarxai_core::study::{
    aggregate, run_all_trials, write_records_csv, Condition, KendallError, ScenarioSet, StudyError, StudyPlan,
    StudyRecord, TieMode, TrialFrame, TrialRecord, DEFAULT_TRIALS_PER_BLOCK, LINGER_TICKS,
};
use lidarxai_core::world::{Action, ObstacleId, NUM_RAYS};
use thiserror::Error;

use crate::protocol::*;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("{action} not allowed while {phase}")]
    OutOfPhase { action: &'static str, phase: SessionPhase },
    #[error("malformed permutation: {0}")]
    MalformedPermutation(#[from] KendallError),
    #[error("all trials of this session are done")]
    StudyComplete,
    #[error("unsupported protocol version {0}, expected {PROTOCOL_VERSION}")]
    UnsupportedVersion(u32),
    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub fn code(&self) -> ErrorCode {
        match self {
            ServiceError::UnknownSession(_) => ErrorCode::UnknownSession,
            ServiceError::OutOfPhase { .. } => ErrorCode::OutOfPhase,
            ServiceError::MalformedPermutation(_) => ErrorCode::MalformedPermutation,
            ServiceError::StudyComplete => ErrorCode::StudyComplete,
            ServiceError::UnsupportedVersion(_) => ErrorCode::UnsupportedVersion,
            ServiceError::Internal(_) => ErrorCode::Internal,
        }
    }

    pub fn to_response(&self) -> ErrorResponse {
        ErrorResponse {
            v: PROTOCOL_VERSION,
            code: self.code(),
            message: self.to_string(),
        }
    }
}

fn check_version(v: u32) -> Result<(), ServiceError> {
    if v == PROTOCOL_VERSION {
        Ok(())
    } else {
        Err(ServiceError::UnsupportedVersion(v))
    }
}

/// Where a session is in the trial cycle:
/// idle → running → linger → awaiting-ranking → ranked → running → … → complete.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionPhase {
    Idle,
    Running,
    Linger,
    AwaitingRanking,
    Ranked,
    Complete,
}

impl std::fmt::Display for SessionPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SessionPhase::Idle => "idle",
            SessionPhase::Running => "running",
            SessionPhase::Linger => "linger",
            SessionPhase::AwaitingRanking => "awaiting ranking",
            SessionPhase::Ranked => "ranked",
            SessionPhase::Complete => "complete",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySettings {
    pub trials_per_block: usize,
    pub seed: u64,
    pub tie_mode: TieMode,
}

impl Default for StudySettings {
    fn default() -> Self {
        Self {
            trials_per_block: DEFAULT_TRIALS_PER_BLOCK,
            seed: 0,
            tie_mode: TieMode::default(),
        }
    }
}

/// Scenarios with every trial precomputed, shared by all sessions.
#[derive(Debug)]
pub struct StudyContext {
    pub scenarios: ScenarioSet,
    pub settings: StudySettings,
    trials: HashMap<u32, TrialRecord>,
}

impl StudyContext {
    pub fn new(policy: &MlpPolicy, scenarios: ScenarioSet, settings: StudySettings) -> Result<Self, StudyError> {
        let trials = run_all_trials(policy, &scenarios)?;
        Ok(Self {
            scenarios,
            settings,
            trials,
        })
    }

    pub fn trial(&self, scenario: u32) -> Option<&TrialRecord> {
        self.trials.get(&scenario)
    }

    /// Packets for one trial: one per computed tick, [`LINGER_TICKS`] holding
    /// the frozen frame, and a closing awaiting-ranking packet.
    pub fn frame_packets(&self, scenario: u32, condition: Condition) -> Option<Vec<FramePacket>> {
        let trial = self.trial(scenario)?;
        let mut packets: Vec<FramePacket> = trial
            .frames
            .iter()
            .map(|f| packet(scenario, f.tick, FramePhase::Running, condition, f, f.action))
            .collect();
        let frozen = trial.frozen();
        let start = packets.len();
        for i in 0..LINGER_TICKS {
            packets.push(packet(scenario, start + i, FramePhase::Linger, condition, frozen, Action::STOP));
        }
        packets.push(packet(
            scenario,
            start + LINGER_TICKS,
            FramePhase::AwaitingRanking,
            condition,
            frozen,
            Action::STOP,
        ));
        Some(packets)
    }
}

fn packet(
    scenario: u32,
    timestep: usize,
    phase: FramePhase,
    condition: Condition,
    frame: &TrialFrame,
    action: Action,
) -> FramePacket {
    let rays = (0..NUM_RAYS)
        .map(|k| RayView {
            end: frame.scan.endpoint(&frame.pose, k),
            hit: frame.scan.hit_object[k].is_some(),
        })
        .collect();
    let objects = frame
        .importance
        .scores
        .iter()
        .zip(&frame.outline_widths)
        .map(|(s, &(_, w))| ObjectView {
            id: s.id,
            score: s.score,
            outline_width: w,
        })
        .collect();
    FramePacket {
        v: PROTOCOL_VERSION,
        scenario,
        timestep,
        phase,
        condition,
        pose: frame.pose,
        action,
        rays: Gated {
            hidden: !condition.lidar_visible,
            value: rays,
        },
        g_star: Gated {
            hidden: !condition.xai_visible,
            value: frame.g_star,
        },
        objects: Gated {
            hidden: !condition.xai_visible,
            value: objects,
        },
    }
}

#[derive(Debug)]
struct ActiveTrial {
    index: usize,
    block: usize,
    scenario: u32,
    condition: Condition,
    packets: Vec<FramePacket>,
    sent: usize,
    truth: TrialRecord,
    revision: Option<u32>,
}

#[derive(Debug)]
struct Session {
    id: String,
    participant: u32,
    plan: StudyPlan,
    phase: SessionPhase,
    next_index: usize,
    active: Option<ActiveTrial>,
    records: Vec<StudyRecord>,
}

/// All live sessions. Each session is mutated under its own lock.
#[derive(Debug)]
pub struct SessionManager {
    ctx: Arc<StudyContext>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    counter: AtomicU64,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl SessionManager {
    pub fn new(ctx: StudyContext) -> Self {
        Self {
            ctx: Arc::new(ctx),
            sessions: Mutex::new(HashMap::new()),
            counter: AtomicU64::new(0),
        }
    }

    pub fn context(&self) -> &StudyContext {
        &self.ctx
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        lock(&self.sessions)
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn phase(&self, id: &str) -> Result<SessionPhase, ServiceError> {
        let arc = self.session(id)?;
        let phase = lock(&arc).phase;
        Ok(phase)
    }

    pub fn create_session(&self, req: &CreateSessionRequest) -> Result<SessionCreated, ServiceError> {
        check_version(req.v)?;
        let n = self.counter.fetch_add(1, Ordering::Relaxed) + 1;
        let id = format!("s{n}-p{}", req.participant);
        let ids: Vec<u32> = self.ctx.scenarios.scenarios.iter().map(|s| s.id).collect();
        let plan = StudyPlan::for_participant(
            req.participant,
            &ids,
            self.ctx.settings.trials_per_block,
            self.ctx.settings.seed,
        );
        let created = SessionCreated {
            v: PROTOCOL_VERSION,
            session: id.clone(),
            participant: req.participant,
            total_trials: plan.trial_count(),
            plan: plan.clone(),
        };
        let session = Session {
            id: id.clone(),
            participant: req.participant,
            plan,
            phase: SessionPhase::Idle,
            next_index: 0,
            active: None,
            records: Vec::new(),
        };
        lock(&self.sessions).insert(id, Arc::new(Mutex::new(session)));
        Ok(created)
    }

    pub fn next_trial(&self, id: &str) -> Result<TrialStarted, ServiceError> {
        let arc = self.session(id)?;
        let mut s = lock(&arc);
        match s.phase {
            SessionPhase::Idle | SessionPhase::Ranked => {}
            SessionPhase::Complete => return Err(ServiceError::StudyComplete),
            phase => {
                return Err(ServiceError::OutOfPhase {
                    action: "next-trial",
                    phase,
                })
            }
        }
        let index = s.next_index;
        let Some((block, block_trial)) = s.plan.locate(index) else {
            s.phase = SessionPhase::Complete;
            return Err(ServiceError::StudyComplete);
        };
        let condition = s.plan.blocks[block].condition;
        let scenario = s.plan.blocks[block].scenarios[block_trial];
        let scene = self
            .ctx
            .scenarios
            .get(scenario)
            .ok_or_else(|| ServiceError::Internal(format!("scenario {scenario} missing")))?
            .scene
            .clone();
        let truth = self
            .ctx
            .trial(scenario)
            .ok_or_else(|| ServiceError::Internal(format!("trial for scenario {scenario} missing")))?
            .clone();
        let packets = self
            .ctx
            .frame_packets(scenario, condition)
            .ok_or_else(|| ServiceError::Internal(format!("frames for scenario {scenario} missing")))?;
        let running_frames = truth.frames.len();
        s.active = Some(ActiveTrial {
            index,
            block,
            scenario,
            condition,
            packets,
            sent: 0,
            truth,
            revision: None,
        });
        s.next_index += 1;
        s.phase = SessionPhase::Running;
        Ok(TrialStarted {
            v: PROTOCOL_VERSION,
            session: s.id.clone(),
            trial: index,
            block,
            block_trial,
            condition,
            scenario,
            scene,
            running_frames,
            linger_frames: LINGER_TICKS,
        })
    }

    /// Hands out the next frame of the active trial and advances the phase with
    /// it. `None` once the trial's frames are exhausted.
    pub fn pull_frame(&self, id: &str) -> Result<Option<FramePacket>, ServiceError> {
        let arc = self.session(id)?;
        let mut s = lock(&arc);
        if !matches!(s.phase, SessionPhase::Running | SessionPhase::Linger) {
            return Ok(None);
        }
        let active = s
            .active
            .as_mut()
            .ok_or_else(|| ServiceError::Internal("running without a trial".into()))?;
        let Some(packet) = active.packets.get(active.sent).cloned() else {
            return Ok(None);
        };
        active.sent += 1;
        s.phase = match packet.phase {
            FramePhase::Running => SessionPhase::Running,
            FramePhase::Linger => SessionPhase::Linger,
            FramePhase::AwaitingRanking => SessionPhase::AwaitingRanking,
        };
        Ok(Some(packet))
    }

    /// Every remaining frame of the active trial, without pacing.
    pub fn drain_frames(&self, id: &str) -> Result<FrameBatch, ServiceError> {
        let mut frames = Vec::new();
        while let Some(p) = self.pull_frame(id)? {
            frames.push(p);
        }
        Ok(FrameBatch {
            v: PROTOCOL_VERSION,
            session: id.to_string(),
            frames,
        })
    }

    /// Scores a ranking for the active trial. Resubmitting before the next
    /// trial starts replaces the earlier ranking; an invalid ranking leaves
    /// the trial unchanged.
    pub fn submit_ranking(&self, id: &str, req: &SubmitRankingRequest) -> Result<RankingAccepted, ServiceError> {
        check_version(req.v)?;
        let arc = self.session(id)?;
        let mut guard = lock(&arc);
        let s = &mut *guard;
        if !matches!(s.phase, SessionPhase::AwaitingRanking | SessionPhase::Ranked) {
            return Err(ServiceError::OutOfPhase {
                action: "submit-ranking",
                phase: s.phase,
            });
        }
        let active = s
            .active
            .as_mut()
            .ok_or_else(|| ServiceError::Internal("ranking without a trial".into()))?;
        let tau = active.truth.submit(req.ranking.clone(), self.ctx.settings.tie_mode)?;
        let revision = active.revision.map_or(0, |r| r + 1);
        let record = StudyRecord {
            participant: s.participant,
            block: active.block,
            condition: active.condition,
            trial: s.plan.locate(active.index).map_or(0, |(_, t)| t),
            scenario: active.scenario,
            tau,
        };
        if active.revision.is_some() {
            *s.records.last_mut().expect("revised trial has a record") = record;
        } else {
            s.records.push(record);
        }
        active.revision = Some(revision);
        s.phase = SessionPhase::Ranked;
        Ok(RankingAccepted {
            v: PROTOCOL_VERSION,
            session: s.id.clone(),
            trial: active.index,
            scenario: active.scenario,
            ranking: req.ranking.clone(),
            tau,
            revision,
            remaining_trials: s.plan.trial_count() - s.next_index,
        })
    }

    /// Ground-truth order of the active trial, for scripted clients and tests.
    pub fn ground_truth(&self, id: &str) -> Result<Vec<ObstacleId>, ServiceError> {
        let arc = self.session(id)?;
        let s = lock(&arc);
        s.active
            .as_ref()
            .map(|a| a.truth.ground_truth().ground_truth_ranking.clone())
            .ok_or(ServiceError::OutOfPhase {
                action: "ground-truth",
                phase: s.phase,
            })
    }

    pub fn results(&self, id: &str) -> Result<ResultsResponse, ServiceError> {
        let arc = self.session(id)?;
        let s = lock(&arc);
        Ok(ResultsResponse {
            v: PROTOCOL_VERSION,
            session: s.id.clone(),
            participant: s.participant,
            completed: s.records.len(),
            total_trials: s.plan.trial_count(),
            aggregate: aggregate(&s.records),
        })
    }

    pub fn records(&self, id: &str) -> Result<Vec<StudyRecord>, ServiceError> {
        let arc = self.session(id)?;
        let records = lock(&arc).records.clone();
        Ok(records)
    }

    /// Long-format CSV of the session's scored trials.
    pub fn export_csv(&self, id: &str) -> Result<String, ServiceError> {
        let records = self.records(id)?;
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &records).map_err(|e| ServiceError::Internal(e.to_string()))?;
        String::from_utf8(buf).map_err(|e| ServiceError::Internal(e.to_string()))
    }
}
