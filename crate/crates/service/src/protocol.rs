//! Versioned JSON messages. Every payload carries `v`.

use lidarxai_core::study::{Aggregate, Condition, StudyPlan};
use lidarxai_core::world::{Action, ObstacleId, Pose, Scene, Vec2, NUM_SECTORS};
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    UnknownSession,
    OutOfPhase,
    MalformedPermutation,
    StudyComplete,
    UnsupportedVersion,
    BadRequest,
    Internal,
}

impl ErrorCode {
    pub fn http_status(self) -> u16 {
        match self {
            ErrorCode::UnknownSession => 404,
            ErrorCode::OutOfPhase | ErrorCode::StudyComplete => 409,
            ErrorCode::MalformedPermutation => 422,
            ErrorCode::UnsupportedVersion | ErrorCode::BadRequest => 400,
            ErrorCode::Internal => 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub v: u32,
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    pub v: u32,
    pub participant: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub v: u32,
    pub session: String,
    pub participant: u32,
    pub plan: StudyPlan,
    pub total_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStarted {
    pub v: u32,
    pub session: String,
    /// Flat trial index across all blocks.
    pub trial: usize,
    pub block: usize,
    pub block_trial: usize,
    pub condition: Condition,
    pub scenario: u32,
    pub scene: Scene,
    pub running_frames: usize,
    pub linger_frames: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FramePhase {
    Running,
    Linger,
    AwaitingRanking,
}

/// A display channel the condition may hide. Hidden values are still sent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gated<T> {
    pub hidden: bool,
    pub value: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayView {
    pub end: Vec2,
    pub hit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectView {
    pub id: ObstacleId,
    pub score: f64,
    pub outline_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePacket {
    pub v: u32,
    pub scenario: u32,
    /// Strictly increasing within a trial: running, then linger, then one
    /// awaiting-ranking packet.
    pub timestep: usize,
    pub phase: FramePhase,
    pub condition: Condition,
    pub pose: Pose,
    pub action: Action,
    /// 360 ray endpoints; hidden unless the lidar channel is on.
    pub rays: Gated<Vec<RayView>>,
    /// Post-processed sector scores; hidden unless the XAI channel is on.
    pub g_star: Gated<[f64; NUM_SECTORS]>,
    /// Per-obstacle scores and outline widths; hidden unless the XAI channel is on.
    pub objects: Gated<Vec<ObjectView>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameBatch {
    pub v: u32,
    pub session: String,
    pub frames: Vec<FramePacket>,
}

/// Messages pushed over the frame stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StreamMessage {
    Frame(Box<FramePacket>),
    Error(ErrorResponse),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitRankingRequest {
    pub v: u32,
    /// Most important first.
    pub ranking: Vec<ObstacleId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingAccepted {
    pub v: u32,
    pub session: String,
    pub trial: usize,
    pub scenario: u32,
    pub ranking: Vec<ObstacleId>,
    pub tau: f64,
    /// 0 for the first submission of a trial, incremented on each revision.
    pub revision: u32,
    pub remaining_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsResponse {
    pub v: u32,
    pub session: String,
    pub participant: u32,
    pub completed: usize,
    pub total_trials: usize,
    pub aggregate: Aggregate,
}
