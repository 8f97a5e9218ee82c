use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::baseline::{baseline_rank, Strategy};
use super::kendall::{kendall_tau, TieMode};
use super::plan::{Condition, StudyPlan};
use super::scenario::ScenarioSet;
use super::trial::{run_trial, TrialRecord};
use super::StudyError;
use crate::policy::MlpPolicy;

/// Participants needed to use every block order once.
pub const DEFAULT_PARTICIPANTS: u32 = 24;
pub const DEFAULT_TRIALS_PER_BLOCK: usize = 12;

/// One scored trial in long format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub participant: u32,
    pub block: usize,
    #[serde(with = "condition_label")]
    pub condition: Condition,
    pub trial: usize,
    pub scenario: u32,
    pub tau: f64,
}

mod condition_label {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use super::Condition;

    pub fn serialize<S: Serializer>(c: &Condition, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(c.label())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Condition, D::Error> {
        let label = String::deserialize(d)?;
        Condition::from_label(&label).ok_or_else(|| D::Error::custom(format!("unknown condition {label:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 when fewer than two values.
    pub sd: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Some(Self { n, mean, sd })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: String,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// In the fixed order none, lidar, xai, xai+lidar; absent conditions are skipped.
    pub conditions: Vec<ConditionSummary>,
    /// Participant → condition label → mean τ.
    pub participants: BTreeMap<u32, BTreeMap<String, f64>>,
    pub overall: Option<Summary>,
}

impl Aggregate {
    pub fn condition(&self, c: Condition) -> Option<&Summary> {
        self.conditions.iter().find(|s| s.condition == c.label()).map(|s| &s.summary)
    }
}

pub fn aggregate(records: &[StudyRecord]) -> Aggregate {
    let conditions = Condition::ALL
        .iter()
        .filter_map(|&c| {
            let taus: Vec<f64> = records.iter().filter(|r| r.condition == c).map(|r| r.tau).collect();
            Summary::of(&taus).map(|summary| ConditionSummary {
                condition: c.label().to_string(),
                summary,
            })
        })
        .collect();
    let mut grouped: BTreeMap<u32, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for r in records {
        grouped
            .entry(r.participant)
            .or_default()
            .entry(r.condition.label().to_string())
            .or_default()
            .push(r.tau);
    }
    let participants = grouped
        .into_iter()
        .map(|(p, by_cond)| {
            let means = by_cond
                .into_iter()
                .map(|(c, v)| (c, v.iter().sum::<f64>() / v.len() as f64))
                .collect();
            (p, means)
        })
        .collect();
    let all: Vec<f64> = records.iter().map(|r| r.tau).collect();
    Aggregate {
        conditions,
        participants,
        overall: Summary::of(&all),
    }
}

/// Long-format CSV: `participant,block,condition,trial,scenario,tau`.
pub fn write_records_csv<W: Write>(out: W, records: &[StudyRecord]) -> Result<(), StudyError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<StudyRecord>, StudyError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(StudyError::from)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadlessConfig {
    pub strategy: Strategy,
    pub participants: u32,
    pub trials_per_block: usize,
    pub seed: u64,
    pub tie_mode: TieMode,
}

impl HeadlessConfig {
    pub fn new(strategy: Strategy, seed: u64) -> Self {
        Self {
            strategy,
            participants: DEFAULT_PARTICIPANTS,
            trials_per_block: DEFAULT_TRIALS_PER_BLOCK,
            seed,
            tie_mode: TieMode::default(),
        }
    }
}

/// Runs every scenario once; conditions never change the computation, so
/// trials can be shared across participants.
pub fn run_all_trials(policy: &MlpPolicy, set: &ScenarioSet) -> Result<HashMap<u32, TrialRecord>, StudyError> {
    set.scenarios
        .iter()
        .map(|s| Ok((s.id, run_trial(policy, s, Condition::NONE)?)))
        .collect()
}

/// Per-trial seed for the random ranker, so every trial draws independently.
fn trial_seed(base: u64, participant: u32, flat_trial: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (u64::from(participant) << 32) ^ flat_trial as u64
}

/// Plays the full counterbalanced study with a baseline ranker in place of participants.
pub fn run_headless_study(
    policy: &MlpPolicy,
    set: &ScenarioSet,
    cfg: &HeadlessConfig,
) -> Result<Vec<StudyRecord>, StudyError> {
    let trials = run_all_trials(policy, set)?;
    score_headless(set, &trials, cfg)
}

/// Scores precomputed trials; see [`run_headless_study`].
pub fn score_headless(
    set: &ScenarioSet,
    trials: &HashMap<u32, TrialRecord>,
    cfg: &HeadlessConfig,
) -> Result<Vec<StudyRecord>, StudyError> {
    let ids: Vec<u32> = set.scenarios.iter().map(|s| s.id).collect();
    let mut records = Vec::with_capacity(cfg.participants as usize * 4 * cfg.trials_per_block);
    for participant in 0..cfg.participants {
        let plan = StudyPlan::for_participant(participant, &ids, cfg.trials_per_block, cfg.seed);
        let mut flat = 0;
        for (b, block) in plan.blocks.iter().enumerate() {
            for (t, &sid) in block.scenarios.iter().enumerate() {
                let scenario = set.get(sid).ok_or(StudyError::UnknownScenario(sid))?;
                let trial = trials.get(&sid).ok_or(StudyError::UnknownScenario(sid))?;
                let strategy = match cfg.strategy {
                    Strategy::Random(_) => Strategy::Random(trial_seed(cfg.seed, participant, flat)),
                    s => s,
                };
                let ranking = baseline_rank(strategy, scenario, trial.frozen());
                let tau = kendall_tau(&ranking, trial.ground_truth(), cfg.tie_mode)?;
                records.push(StudyRecord {
                    participant,
                    block: b,
                    condition: block.condition,
                    trial: t,
                    scenario: sid,
                    tau,
                });
                flat += 1;
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(participant: u32, condition: Condition, tau: f64) -> StudyRecord {
        StudyRecord {
            participant,
            block: 0,
            condition,
            trial: 0,
            scenario: 0,
            tau,
        }
    }

    #[test]
    fn single_record() {
        let a = aggregate(&[rec(0, Condition::XAI, 0.4)]);
        assert_eq!(a.conditions.len(), 1);
        let s = a.condition(Condition::XAI).unwrap();
        assert_eq!((s.n, s.mean, s.sd), (1, 0.4, 0.0));
        assert!(a.condition(Condition::NONE).is_none());
    }

    #[test]
    fn all_oracle() {
        let records: Vec<_> = (0..8).map(|i| rec(i / 4, Condition::ALL[i as usize % 4], 1.0)).collect();
        let a = aggregate(&records);
        for c in Condition::ALL {
            let s = a.condition(c).unwrap();
            assert_eq!((s.mean, s.sd), (1.0, 0.0));
        }
        assert_eq!(a.participants.len(), 2);
    }

    #[test]
    fn sample_sd() {
        let records = [rec(0, Condition::NONE, 0.0), rec(1, Condition::NONE, 1.0)];
        let s = *aggregate(&records).condition(Condition::NONE).unwrap();
        assert!((s.sd - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let records = vec![rec(3, Condition::XAI_LIDAR, -0.2), rec(4, Condition::LIDAR, 0.6)];
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("participant,block,condition,trial,scenario,tau\n"));
        assert!(text.contains(",xai+lidar,"));
        assert_eq!(read_records_csv(buf.as_slice()).unwrap(), records);
    }
}
