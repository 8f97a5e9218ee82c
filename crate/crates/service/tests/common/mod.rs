#![allow(dead_code)]

use lidarxai_core::attribution::{rank_by_score, ObjectScore};
use lidarxai_core::policy::MlpPolicy;
use lidarxai_core::study::{generate_scenarios, STUDY_SCENARIOS};
use lidarxai_core::world::ObstacleId;
use lidarxai_service::{FramePacket, SessionManager, StudyContext, StudySettings};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn manager() -> SessionManager {
    let policy = MlpPolicy::init(&mut ChaCha8Rng::seed_from_u64(5));
    let scenarios = generate_scenarios(21, STUDY_SCENARIOS).unwrap();
    SessionManager::new(StudyContext::new(&policy, scenarios, StudySettings::default()).unwrap())
}

/// Ground-truth order recovered from the scores carried by the final packet.
pub fn oracle_from_packet(packet: &FramePacket) -> Vec<ObstacleId> {
    let scores: Vec<ObjectScore> = packet
        .objects
        .value
        .iter()
        .map(|o| ObjectScore { id: o.id, score: o.score })
        .collect();
    rank_by_score(&scores)
}
