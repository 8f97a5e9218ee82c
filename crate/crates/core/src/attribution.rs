//! Vanilla Gradient attribution of the linear-velocity head, absolute min-max
//! rescaling, and projection of the pooled scores onto scene obstacles.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::{MlpPolicy, OutputHead, PolicyError};
use crate::world::state::{GOAL_SLICE, LIDAR_SLICE};
use crate::world::{
    build_state, LidarScan, ObstacleId, Observation, PooledScan, Pose, Scene, StateVector,
    NUM_SECTORS, STATE_DIM,
};

/// Outline widths in display units for scores 0 and 1.
pub const OUTLINE_WIDTH_MIN: f64 = 0.5;
pub const OUTLINE_WIDTH_MAX: f64 = 6.0;

#[derive(Debug, Error)]
pub enum AttributionError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("trace csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed trace: {0}")]
    Trace(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawAttribution {
    /// ∂v/∂L: the lidar slice of the velocity gradient.
    pub g: [f64; NUM_SECTORS],
    /// The whole 17-entry gradient, goal slice included.
    pub full_gradient: [f64; STATE_DIM],
}

impl RawAttribution {
    pub fn goal(&self) -> [f64; 2] {
        [self.full_gradient[GOAL_SLICE.start], self.full_gradient[GOAL_SLICE.start + 1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessedAttribution {
    pub g_star: [f64; NUM_SECTORS],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectScore {
    pub id: ObstacleId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectImportance {
    /// One entry per scene obstacle, in scene order.
    pub scores: Vec<ObjectScore>,
    /// Obstacle ids by descending score, ties by ascending id.
    pub ground_truth_ranking: Vec<ObstacleId>,
}

impl ObjectImportance {
    pub fn score(&self, id: ObstacleId) -> Option<f64> {
        self.scores.iter().find(|s| s.id == id).map(|s| s.score)
    }
}

pub fn vanilla_gradient(policy: &MlpPolicy, state: &StateVector) -> Result<RawAttribution, PolicyError> {
    let full_gradient = policy.input_gradient(state, OutputHead::V)?;
    let mut g = [0.0; NUM_SECTORS];
    g.copy_from_slice(&full_gradient[LIDAR_SLICE]);
    Ok(RawAttribution { g, full_gradient })
}

/// `(|g| − min|g|) / (max|g| − min|g|)`; all zeros when every `|g|` is equal.
pub fn postprocess(g: &[f64; NUM_SECTORS]) -> ProcessedAttribution {
    let abs = g.map(f64::abs);
    let min = abs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = abs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let g_star = if span > 0.0 {
        abs.map(|a| (a - min) / span)
    } else {
        [0.0; NUM_SECTORS]
    };
    ProcessedAttribution { g_star }
}

/// Each sector's score goes to the obstacle its contributing ray hit; an obstacle
/// keeps the maximum over its sectors and unhit obstacles score 0.
pub fn map_to_objects(
    processed: &ProcessedAttribution,
    pooled: &PooledScan,
    scan: &LidarScan,
    scene: &Scene,
) -> ObjectImportance {
    let mut scores: Vec<ObjectScore> = scene
        .obstacles
        .iter()
        .map(|o| ObjectScore { id: o.id, score: 0.0 })
        .collect();
    for (sector, &ray) in pooled.contributing_ray.iter().enumerate() {
        if let Some(id) = scan.hit_object[ray] {
            if let Some(entry) = scores.iter_mut().find(|s| s.id == id) {
                entry.score = entry.score.max(processed.g_star[sector]);
            }
        }
    }
    let ground_truth_ranking = rank_by_score(&scores);
    ObjectImportance {
        scores,
        ground_truth_ranking,
    }
}

/// Descending score, ascending id on ties.
pub fn rank_by_score(scores: &[ObjectScore]) -> Vec<ObstacleId> {
    let mut order = scores.to_vec();
    order.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.id.cmp(&b.id)));
    order.into_iter().map(|s| s.id).collect()
}

pub fn outline_width(score: f64) -> f64 {
    OUTLINE_WIDTH_MIN + score * (OUTLINE_WIDTH_MAX - OUTLINE_WIDTH_MIN)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledRay {
    pub sector: usize,
    /// Raw ray index that set the sector minimum.
    pub ray: usize,
    pub distance: f64,
    pub score: f64,
    pub hit: Option<ObstacleId>,
}

/// Everything shown for one control tick.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionFrame {
    pub observation: Observation,
    pub raw: RawAttribution,
    pub processed: ProcessedAttribution,
    pub importance: ObjectImportance,
    pub pooled_rays: [PooledRay; NUM_SECTORS],
    /// `(id, width)` per obstacle, in scene order.
    pub outline_widths: Vec<(ObstacleId, f64)>,
}

pub fn attribution_frame(
    policy: &MlpPolicy,
    scene: &Scene,
    pose: &Pose,
) -> Result<AttributionFrame, PolicyError> {
    let observation = build_state(scene, pose);
    let raw = vanilla_gradient(policy, &observation.state)?;
    let processed = postprocess(&raw.g);
    let importance = map_to_objects(&processed, &observation.pooled, &observation.scan, scene);
    let pooled_rays = std::array::from_fn(|sector| {
        let ray = observation.pooled.contributing_ray[sector];
        PooledRay {
            sector,
            ray,
            distance: observation.pooled.distances[sector],
            score: processed.g_star[sector],
            hit: observation.scan.hit_object[ray],
        }
    });
    let outline_widths = importance
        .scores
        .iter()
        .map(|s| (s.id, outline_width(s.score)))
        .collect();
    Ok(AttributionFrame {
        observation,
        raw,
        processed,
        importance,
        pooled_rays,
        outline_widths,
    })
}

/// One row of an attribution trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub timestep: usize,
    pub g: [f64; NUM_SECTORS],
    pub g_goal: [f64; 2],
    pub g_star: [f64; NUM_SECTORS],
    pub object_scores: Vec<ObjectScore>,
}

impl TraceRow {
    pub fn from_frame(timestep: usize, frame: &AttributionFrame) -> Self {
        Self {
            timestep,
            g: frame.raw.g,
            g_goal: frame.raw.goal(),
            g_star: frame.processed.g_star,
            object_scores: frame.importance.scores.clone(),
        }
    }
}

/// Writes rows as CSV: `timestep, g_0..g_14, g_goal_r, g_goal_theta, gstar_0..gstar_14,
/// score_<id>...`. All rows must share the obstacle ids of the first row.
pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> Result<(), AttributionError> {
    let mut w = csv::Writer::from_writer(out);
    let ids: Vec<ObstacleId> = rows
        .first()
        .map(|r| r.object_scores.iter().map(|s| s.id).collect())
        .unwrap_or_default();
    let mut header = vec!["timestep".to_string()];
    header.extend((0..NUM_SECTORS).map(|j| format!("g_{j}")));
    header.extend(["g_goal_r".to_string(), "g_goal_theta".to_string()]);
    header.extend((0..NUM_SECTORS).map(|j| format!("gstar_{j}")));
    header.extend(ids.iter().map(|id| format!("score_{id}")));
    w.write_record(&header)?;
    for row in rows {
        let row_ids: Vec<ObstacleId> = row.object_scores.iter().map(|s| s.id).collect();
        if row_ids != ids {
            return Err(AttributionError::Trace("obstacle ids differ between rows".into()));
        }
        let mut rec = vec![row.timestep.to_string()];
        rec.extend(row.g.iter().map(|x| format!("{x:e}")));
        rec.extend(row.g_goal.iter().map(|x| format!("{x:e}")));
        rec.extend(row.g_star.iter().map(|x| format!("{x:e}")));
        rec.extend(row.object_scores.iter().map(|s| format!("{:e}", s.score)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>, AttributionError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let fixed = 1 + 2 * NUM_SECTORS + 2;
    if header.len() < fixed || &header[0] != "timestep" {
        return Err(AttributionError::Trace("unexpected header".into()));
    }
    let ids = header
        .iter()
        .skip(fixed)
        .map(|h| {
            h.strip_prefix("score_")
                .and_then(|s| s.parse().ok())
                .map(ObstacleId)
                .ok_or_else(|| AttributionError::Trace(format!("bad column {h:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, AttributionError> {
            rec[i]
                .parse()
                .map_err(|_| AttributionError::Trace(format!("bad number {:?}", &rec[i])))
        };
        let timestep = rec[0]
            .parse()
            .map_err(|_| AttributionError::Trace(format!("bad timestep {:?}", &rec[0])))?;
        let mut g = [0.0; NUM_SECTORS];
        let mut g_star = [0.0; NUM_SECTORS];
        for j in 0..NUM_SECTORS {
            g[j] = num(1 + j)?;
            g_star[j] = num(3 + NUM_SECTORS + j)?;
        }
        let g_goal = [num(1 + NUM_SECTORS)?, num(2 + NUM_SECTORS)?];
        let object_scores = ids
            .iter()
            .enumerate()
            .map(|(k, &id)| Ok(ObjectScore { id, score: num(fixed + k)? }))
            .collect::<Result<_, AttributionError>>()?;
        rows.push(TraceRow {
            timestep,
            g,
            g_goal,
            g_star,
            object_scores,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::world::{Obstacle, Shape, Vec2, NUM_RAYS};

    fn pad(head: &[f64]) -> [f64; NUM_SECTORS] {
        let mut g = [0.0; NUM_SECTORS];
        g[..head.len()].copy_from_slice(head);
        g
    }

    #[test]
    fn postprocess_abs_min_max() {
        let p = postprocess(&pad(&[-2.0, 0.0, 2.0]));
        assert_eq!(p.g_star, pad(&[1.0, 0.0, 1.0]));
    }

    #[test]
    fn postprocess_degenerate() {
        assert_eq!(postprocess(&[0.7; NUM_SECTORS]).g_star, [0.0; NUM_SECTORS]);
        let mut mixed = [0.7; NUM_SECTORS];
        mixed[3] = -0.7;
        assert_eq!(postprocess(&mixed).g_star, [0.0; NUM_SECTORS]);
    }

    proptest! {
        #[test]
        fn postprocess_bounds(g in proptest::array::uniform15(-10.0f64..10.0)) {
            let p = postprocess(&g).g_star;
            let min = p.iter().copied().fold(f64::INFINITY, f64::min);
            let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
            prop_assert_eq!(min, 0.0);
            prop_assert_eq!(max, 1.0);
        }
    }

    fn scan_with(hits: &[(usize, f64, u32)]) -> LidarScan {
        let mut scan = LidarScan {
            distances: vec![6.0; NUM_RAYS],
            hit_object: vec![None; NUM_RAYS],
        };
        for &(k, d, id) in hits {
            scan.distances[k] = d;
            scan.hit_object[k] = Some(ObstacleId(id));
        }
        scan
    }

    fn scene_ids(ids: &[u32]) -> Scene {
        let obstacles = ids
            .iter()
            .map(|&id| Obstacle {
                id: ObstacleId(id),
                shape: Shape::Circle {
                    center: Vec2::new(3.0, id as f64),
                    radius: 0.3,
                },
            })
            .collect();
        Scene::new(obstacles, Vec2::new(-2.0, 0.0), Pose::new(Vec2::ZERO, 0.0), crate::world::DEFAULT_BOUNDS)
    }

    #[test]
    fn object_takes_max_of_its_sectors() {
        // obstacle 4 owns sectors 0 and 1, obstacle 9 owns nothing
        let scan = scan_with(&[(5, 2.0, 4), (30, 2.5, 4)]);
        let pooled = crate::world::pool(&scan);
        let processed = ProcessedAttribution {
            g_star: pad(&[0.3, 0.9, 1.0]),
        };
        let imp = map_to_objects(&processed, &pooled, &scan, &scene_ids(&[4, 9]));
        assert_eq!(imp.score(ObstacleId(4)), Some(0.9));
        assert_eq!(imp.score(ObstacleId(9)), Some(0.0));
        assert_eq!(imp.ground_truth_ranking, vec![ObstacleId(4), ObstacleId(9)]);
    }

    #[test]
    fn ties_rank_by_id() {
        let scores = [
            ObjectScore { id: ObstacleId(3), score: 0.0 },
            ObjectScore { id: ObstacleId(1), score: 0.5 },
            ObjectScore { id: ObstacleId(0), score: 0.0 },
        ];
        assert_eq!(rank_by_score(&scores), vec![ObstacleId(1), ObstacleId(0), ObstacleId(3)]);
    }

    #[test]
    fn occluded_object_scores_zero() {
        let mut scene = scene_ids(&[0, 1]);
        scene.obstacles[0].shape = Shape::Circle {
            center: Vec2::new(2.0, 0.0),
            radius: 0.5,
        };
        scene.obstacles[1].shape = Shape::Circle {
            center: Vec2::new(4.0, 0.0),
            radius: 0.2,
        };
        let policy = MlpPolicy::init(&mut ChaCha8Rng::seed_from_u64(0));
        let frame = attribution_frame(&policy, &scene, &Pose::new(Vec2::ZERO, 0.0)).unwrap();
        assert_eq!(frame.importance.score(ObstacleId(1)), Some(0.0));
    }

    #[test]
    fn width_endpoints_and_monotone() {
        assert_eq!(outline_width(0.0), OUTLINE_WIDTH_MIN);
        assert_eq!(outline_width(1.0), OUTLINE_WIDTH_MAX);
        let widths: Vec<f64> = (0..=10).map(|k| outline_width(k as f64 / 10.0)).collect();
        assert!(widths.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn lidar_blind_policy_has_zero_g() {
        let mut policy = MlpPolicy::init(&mut ChaCha8Rng::seed_from_u64(4));
        policy.network_mut().layers[0]
            .weight
            .slice_mut(ndarray::s![.., 0..NUM_SECTORS])
            .fill(0.0);
        let s = StateVector([0.4; STATE_DIM]);
        let raw = vanilla_gradient(&policy, &s).unwrap();
        assert_eq!(raw.g, [0.0; NUM_SECTORS]);
        assert!(raw.goal().iter().any(|&x| x != 0.0));
    }

    #[test]
    fn trace_round_trip() {
        let policy = MlpPolicy::init(&mut ChaCha8Rng::seed_from_u64(1));
        let scene = scene_ids(&[0, 1, 2]);
        let rows: Vec<TraceRow> = (0..3)
            .map(|t| {
                let pose = Pose::new(Vec2::new(0.1 * t as f64, 0.0), 0.0);
                TraceRow::from_frame(t, &attribution_frame(&policy, &scene, &pose).unwrap())
            })
            .collect();
        let mut buf = Vec::new();
        write_trace(&mut buf, &rows).unwrap();
        assert_eq!(read_trace(buf.as_slice()).unwrap(), rows);
    }
}
