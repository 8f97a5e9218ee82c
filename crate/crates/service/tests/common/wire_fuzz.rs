//! Random instances of every wire message, checked for serialize/parse identity.

use lidarxai_core::study::{aggregate, Condition, StudyPlan, StudyRecord};
use lidarxai_core::world::{sample_scene, Action, ObstacleId, Pose, SamplerConfig, Vec2};
use lidarxai_service::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn f(rng: &mut ChaCha8Rng) -> f64 {
    let mag = 10f64.powf(rng.random_range(-12.0..4.0));
    if rng.random_bool(0.1) {
        0.0
    } else if rng.random_bool(0.5) {
        -mag
    } else {
        mag
    }
}

fn text(rng: &mut ChaCha8Rng) -> String {
    let alphabet: Vec<char> = "abcXYZ019-_ \"\\/é✓\n\t".chars().collect();
    (0..rng.random_range(0..24)).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
}

fn condition(rng: &mut ChaCha8Rng) -> Condition {
    Condition::ALL[rng.random_range(0..4)]
}

fn ids(rng: &mut ChaCha8Rng) -> Vec<ObstacleId> {
    (0..rng.random_range(0..7)).map(|_| ObstacleId(rng.random())).collect()
}

fn packet(rng: &mut ChaCha8Rng) -> FramePacket {
    let phase = [FramePhase::Running, FramePhase::Linger, FramePhase::AwaitingRanking][rng.random_range(0..3)];
    let c = condition(rng);
    FramePacket {
        v: PROTOCOL_VERSION,
        scenario: rng.random(),
        timestep: rng.random_range(0..1000),
        phase,
        condition: c,
        pose: Pose::new(Vec2::new(f(rng), f(rng)), rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)),
        action: Action { v: f(rng), omega: f(rng) },
        rays: Gated {
            hidden: !c.lidar_visible,
            value: (0..rng.random_range(0..360))
                .map(|_| RayView { end: Vec2::new(f(rng), f(rng)), hit: rng.random() })
                .collect(),
        },
        g_star: Gated { hidden: rng.random(), value: std::array::from_fn(|_| f(rng)) },
        objects: Gated {
            hidden: !c.xai_visible,
            value: (0..rng.random_range(0..6))
                .map(|_| ObjectView { id: ObstacleId(rng.random()), score: f(rng), outline_width: f(rng) })
                .collect(),
        },
    }
}

fn error(rng: &mut ChaCha8Rng) -> ErrorResponse {
    let codes = [
        ErrorCode::UnknownSession,
        ErrorCode::OutOfPhase,
        ErrorCode::MalformedPermutation,
        ErrorCode::StudyComplete,
        ErrorCode::UnsupportedVersion,
        ErrorCode::BadRequest,
        ErrorCode::Internal,
    ];
    ErrorResponse { v: rng.random(), code: codes[rng.random_range(0..codes.len())], message: text(rng) }
}

fn records(rng: &mut ChaCha8Rng) -> Vec<StudyRecord> {
    (0..rng.random_range(0..30))
        .map(|i| StudyRecord {
            participant: rng.random_range(0..30),
            block: rng.random_range(0..4),
            condition: condition(rng),
            trial: i,
            scenario: rng.random_range(0..48),
            tau: rng.random_range(-1.0..=1.0),
        })
        .collect()
}

fn round_trip<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(value: &T) -> Result<(), String> {
    let name = std::any::type_name::<T>();
    let json = serde_json::to_string(value).map_err(|e| format!("{name}: {e}"))?;
    let back: T = serde_json::from_str(&json).map_err(|e| format!("{name}: {e} in {json}"))?;
    if &back != value {
        return Err(format!("{name}: parsed value differs for {json}"));
    }
    let again = serde_json::to_string(&back).map_err(|e| format!("{name}: {e}"))?;
    if again != json {
        return Err(format!("{name}: re-serialized text differs for {json}"));
    }
    Ok(())
}

/// Serializes and parses one randomly filled instance of every message type.
pub fn every_message_round_trips(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rng = &mut rng;
    let session = text(rng);
    let ids_pool: Vec<u32> = (0..rng.random_range(1..60)).collect();
    let plan = StudyPlan::for_participant(rng.random_range(0..100), &ids_pool, rng.random_range(1..15), rng.random());

    round_trip(&error(rng))?;
    round_trip(&CreateSessionRequest { v: rng.random(), participant: rng.random() })?;
    round_trip(&SessionCreated {
        v: PROTOCOL_VERSION,
        session: session.clone(),
        participant: plan.participant,
        total_trials: plan.trial_count(),
        plan,
    })?;
    let scene = sample_scene(rng, &SamplerConfig::training()).unwrap();
    round_trip(&TrialStarted {
        v: PROTOCOL_VERSION,
        session: session.clone(),
        trial: rng.random_range(0..48),
        block: rng.random_range(0..4),
        block_trial: rng.random_range(0..12),
        condition: condition(rng),
        scenario: rng.random(),
        scene,
        running_frames: rng.random_range(0..31),
        linger_frames: 10,
    })?;
    let p = packet(rng);
    round_trip(&p)?;
    round_trip(&StreamMessage::Frame(Box::new(p)))?;
    round_trip(&StreamMessage::Error(error(rng)))?;
    round_trip(&FrameBatch {
        v: PROTOCOL_VERSION,
        session: session.clone(),
        frames: (0..rng.random_range(0..4)).map(|_| packet(rng)).collect(),
    })?;
    round_trip(&SubmitRankingRequest { v: rng.random(), ranking: ids(rng) })?;
    round_trip(&RankingAccepted {
        v: PROTOCOL_VERSION,
        session: session.clone(),
        trial: rng.random_range(0..48),
        scenario: rng.random(),
        ranking: ids(rng),
        tau: rng.random_range(-1.0..=1.0),
        revision: rng.random_range(0..5),
        remaining_trials: rng.random_range(0..48),
    })?;
    let recs = records(rng);
    round_trip(&ResultsResponse {
        v: PROTOCOL_VERSION,
        session,
        participant: rng.random(),
        completed: recs.len(),
        total_trials: 48,
        aggregate: aggregate(&recs),
    })?;
    Ok(())
}
