//! Ranking study: scenarios, counterbalanced plans, trials, scoring and aggregation.

pub mod aggregate;
pub mod baseline;
pub mod kendall;
pub mod plan;
pub mod scenario;
pub mod trial;

use thiserror::Error;

pub use aggregate::{
    aggregate, read_records_csv, run_all_trials, run_headless_study, score_headless, write_records_csv, Aggregate,
    ConditionSummary, HeadlessConfig, StudyRecord, Summary, DEFAULT_PARTICIPANTS, DEFAULT_TRIALS_PER_BLOCK,
};
pub use baseline::{baseline_rank, Strategy};
pub use kendall::{kendall_tau, ranking_tau, tau_b, KendallError, TieMode};
pub use plan::{block_orders, Block, Condition, StudyPlan};
pub use scenario::{generate_scenarios, Scenario, ScenarioError, ScenarioSet, STUDY_SCENARIOS};
pub use trial::{run_trial, TrialFrame, TrialRecord, LINGER_TICKS, TRIAL_TICKS};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Policy(#[from] crate::policy::PolicyError),
    #[error(transparent)]
    Kendall(#[from] KendallError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("unknown scenario {0}")]
    UnknownScenario(u32),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
