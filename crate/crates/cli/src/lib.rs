//! Operator commands behind the `lidarxai` binary. Each command is a plain
//! function so tests can call it without spawning a process.

pub mod figures;

use std::fs::{self, File};
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use lidarxai_core::attribution::{attribution_frame, read_trace, write_trace, AttributionError, TraceRow};
use lidarxai_core::policy::{load_policy, Checkpoint, MlpPolicy, PolicyError};
use lidarxai_core::study::{
    aggregate, generate_scenarios, run_all_trials, score_headless, write_records_csv, Aggregate, HeadlessConfig,
    ScenarioError, ScenarioSet, Strategy, StudyError, STUDY_SCENARIOS,
};
use lidarxai_core::td3::{evaluate_policy, sampled_scenes, train_with_progress, EvalReport, TrainConfig, TrainError, TrainLog};
use lidarxai_core::world::{sample_scene, Outcome, SamplerError, Scene};
use lidarxai_service::{bind_and_serve, ServerConfig, SessionManager, StudyContext, StudySettings};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Overrides the default data directory (`./lidarxai-data`).
pub const DATA_DIR_ENV: &str = "LIDARXAI_DATA_DIR";
pub const CHECKPOINT_FILE: &str = "policy.json";
pub const SCENARIOS_FILE: &str = "scenarios.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Attribution(#[from] AttributionError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("lidarxai-data"))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

pub fn load_checkpoint(path: &Path) -> Result<MlpPolicy, CliError> {
    if !path.exists() {
        return Err(CliError::Invalid(format!("checkpoint {} not found", path.display())));
    }
    Ok(load_policy(path)?)
}

/// Loads a scenario file, or generates the study set from `seed` when none is given.
pub fn load_or_generate_scenarios(path: Option<&Path>, seed: u64) -> Result<ScenarioSet, CliError> {
    match path {
        Some(p) => Ok(ScenarioSet::load(p)?),
        None => Ok(generate_scenarios(seed, STUDY_SCENARIOS)?),
    }
}

pub struct TrainArgs {
    pub config: Option<PathBuf>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

pub struct TrainOutput {
    pub config: TrainConfig,
    pub log: TrainLog,
    pub policy: MlpPolicy,
    pub checkpoint: PathBuf,
}

pub fn cmd_train(args: &TrainArgs, mut progress: impl FnMut(&str)) -> Result<TrainOutput, CliError> {
    let mut config = match &args.config {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    if let Some(steps) = args.steps {
        config.total_steps = steps;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    ensure_dir(&args.out)?;
    let sampler_cfg = config.clone();
    let mut scenes = sampled_scenes(&sampler_cfg);
    let result = train_with_progress(&config, &mut scenes, |entry, log| {
        if (entry.episode + 1) % 100 == 0 {
            let recent = &log.episodes[log.episodes.len() - 100..];
            let goals = recent.iter().filter(|e| e.outcome == Outcome::Goal).count();
            let collisions = recent.iter().filter(|e| e.outcome == Outcome::Collision).count();
            progress(&format!(
                "episode {} step {}: last 100 goal {goals} collision {collisions}",
                entry.episode + 1,
                entry.step
            ));
        }
    })?;
    let checkpoint = args.out.join(CHECKPOINT_FILE);
    Checkpoint::from_policy(&result.policy, Some(serde_json::to_value(&config)?)).save(&checkpoint)?;
    let log_path = args.out.join("train_log.csv");
    result.log.write_csv(create(&log_path)?)?;
    Ok(TrainOutput {
        config,
        log: result.log,
        policy: result.policy,
        checkpoint,
    })
}

/// Evaluation scenes: the scenario file's scenes, or `count` fresh training scenes.
pub fn eval_scenes(scenarios: Option<&Path>, seed: u64, count: usize) -> Result<Vec<Scene>, CliError> {
    match scenarios {
        Some(p) => Ok(ScenarioSet::load(p)?.scenarios.into_iter().map(|s| s.scene).collect()),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = TrainConfig::default().sampler;
            (0..count)
                .map(|_| sample_scene(&mut rng, &cfg).map_err(CliError::from))
                .collect()
        }
    }
}

pub fn cmd_eval(
    checkpoint: &Path,
    scenarios: Option<&Path>,
    seed: u64,
    episodes: usize,
) -> Result<EvalReport, CliError> {
    if episodes == 0 {
        return Err(CliError::Invalid("episodes must be positive".into()));
    }
    let policy = load_checkpoint(checkpoint)?;
    let scenes = eval_scenes(scenarios, seed, episodes)?;
    if scenes.is_empty() {
        return Err(CliError::Invalid("no scenes to evaluate".into()));
    }
    let cfg = TrainConfig::default();
    Ok(evaluate_policy(&policy, &scenes, episodes, cfg.limits, &cfg.reward))
}

pub fn format_eval(report: &EvalReport) -> String {
    format!(
        "episodes  success  collision  timeout  mean_return\n{:>8}  {:>7.3}  {:>9.3}  {:>7.3}  {:>11.4}\n",
        report.episodes, report.success_rate, report.collision_rate, report.timeout_rate, report.mean_return
    )
}

pub fn cmd_scenarios(seed: u64, count: usize, out: &Path) -> Result<ScenarioSet, CliError> {
    if count == 0 {
        return Err(CliError::Invalid("count must be positive".into()));
    }
    let set = generate_scenarios(seed, count)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    set.save(out)?;
    Ok(set)
}

pub fn parse_strategy(name: &str, seed: u64) -> Result<Strategy, CliError> {
    Strategy::parse(name, seed).ok_or_else(|| {
        CliError::Invalid(format!(
            "unknown strategy {name:?}; expected oracle, proximity, path-proximity, front-cone or random"
        ))
    })
}

pub struct StudyOutput {
    pub csv: String,
    pub aggregate: Aggregate,
}

/// Headless counterbalanced study with a baseline ranker. The CSV depends only
/// on the checkpoint, the scenarios, the strategy and the seed.
pub fn cmd_study(
    checkpoint: &Path,
    scenarios: Option<&Path>,
    strategy: &str,
    seed: u64,
) -> Result<StudyOutput, CliError> {
    let policy = load_checkpoint(checkpoint)?;
    let set = load_or_generate_scenarios(scenarios, seed)?;
    let strategy = parse_strategy(strategy, seed)?;
    let trials = run_all_trials(&policy, &set)?;
    let records = score_headless(&set, &trials, &HeadlessConfig::new(strategy, seed))?;
    let mut buf = Vec::new();
    write_records_csv(&mut buf, &records)?;
    Ok(StudyOutput {
        csv: String::from_utf8(buf).map_err(|e| CliError::Invalid(e.to_string()))?,
        aggregate: aggregate(&records),
    })
}

pub fn format_aggregate(agg: &Aggregate) -> String {
    let mut out = String::from("condition   n     mean_tau  sd_tau\n");
    for c in &agg.conditions {
        out.push_str(&format!(
            "{:<10} {:>4}  {:>8.4}  {:>6.4}\n",
            c.condition, c.summary.n, c.summary.mean, c.summary.sd
        ));
    }
    out
}

/// Writes one attribution trace per scenario (`trace_<id>.csv`) covering every
/// tick of its trial. Returns the written paths.
pub fn cmd_trace(checkpoint: &Path, scenarios: Option<&Path>, seed: u64, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let policy = load_checkpoint(checkpoint)?;
    let set = load_or_generate_scenarios(scenarios, seed)?;
    ensure_dir(out)?;
    let trials = run_all_trials(&policy, &set)?;
    let mut paths = Vec::new();
    for scenario in &set.scenarios {
        let trial = &trials[&scenario.id];
        let rows: Vec<TraceRow> = trial
            .frames
            .iter()
            .map(|f| TraceRow {
                timestep: f.tick,
                g: f.raw.g,
                g_goal: f.raw.goal(),
                g_star: f.g_star,
                object_scores: f.importance.scores.clone(),
            })
            .collect();
        let path = out.join(format!("trace_{}.csv", scenario.id));
        write_trace(create(&path)?, &rows)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Shape of the raw attribution distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributionStats {
    pub lidar_count: usize,
    /// Fraction of raw lidar entries `≥ −eps`.
    pub lidar_nonnegative: f64,
    pub lidar_iqr: f64,
    pub goal_iqr: f64,
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    match sorted.get(i + 1) {
        Some(&next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

fn iqr(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.75) - quantile(&v, 0.25)
}

pub fn attribution_stats(lidar: &[f64], goal: &[f64], eps: f64) -> AttributionStats {
    let nonneg = lidar.iter().filter(|&&g| g >= -eps).count();
    AttributionStats {
        lidar_count: lidar.len(),
        lidar_nonnegative: nonneg as f64 / lidar.len().max(1) as f64,
        lidar_iqr: iqr(lidar),
        goal_iqr: iqr(goal),
    }
}

pub struct HistOutput {
    pub csv: PathBuf,
    pub svg: PathBuf,
    pub rows: usize,
    pub stats: AttributionStats,
}

pub fn cmd_export_hist(traces: &[PathBuf], bins: usize, out: &Path) -> Result<HistOutput, CliError> {
    if traces.is_empty() {
        return Err(CliError::Invalid("no trace files given".into()));
    }
    if bins == 0 {
        return Err(CliError::Invalid("bins must be positive".into()));
    }
    let mut rows = Vec::new();
    for path in traces {
        rows.extend(read_trace(File::open(path).map_err(io_err(path))?)?);
    }
    let hist = figures::histogram(&rows, bins);
    ensure_dir(out)?;
    let csv = out.join("hist.csv");
    let mut w = csv::Writer::from_writer(create(&csv)?);
    for b in &hist {
        w.serialize(b)?;
    }
    w.flush().map_err(io_err(&csv))?;
    let svg = out.join("hist.svg");
    write_text(&svg, &figures::histogram_svg(&hist))?;
    let [lidar, goal, _] = figures::series_values(&rows);
    Ok(HistOutput {
        csv,
        svg,
        rows: rows.len(),
        stats: attribution_stats(&lidar, &goal, 1e-3),
    })
}

pub struct SceneOutput {
    pub rays_csv: PathBuf,
    pub objects_csv: PathBuf,
    pub svg: PathBuf,
}

pub fn cmd_export_scene(
    checkpoint: &Path,
    scenarios: Option<&Path>,
    seed: u64,
    scenario: u32,
    timestep: usize,
    out: &Path,
) -> Result<SceneOutput, CliError> {
    let policy = load_checkpoint(checkpoint)?;
    let set = load_or_generate_scenarios(scenarios, seed)?;
    let sc = set
        .get(scenario)
        .ok_or_else(|| CliError::Invalid(format!("scenario {scenario} not in set")))?;
    let trial = lidarxai_core::study::run_trial(&policy, sc, lidarxai_core::study::Condition::ALL[0])?;
    let frame = trial.frames.get(timestep).ok_or_else(|| {
        CliError::Invalid(format!(
            "timestep {timestep} out of range, trial has {} ticks",
            trial.frames.len()
        ))
    })?;
    let pose = frame.pose;
    let full = attribution_frame(&policy, &sc.scene, &pose)?;
    ensure_dir(out)?;
    let rays_csv = out.join(format!("scene_{scenario}_t{timestep}_rays.csv"));
    let mut w = csv::Writer::from_writer(create(&rays_csv)?);
    for r in figures::ray_rows(&pose, &full) {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(&rays_csv))?;
    let objects_csv = out.join(format!("scene_{scenario}_t{timestep}_objects.csv"));
    let mut w = csv::Writer::from_writer(create(&objects_csv)?);
    for r in figures::object_rows(&sc.scene, &full) {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(&objects_csv))?;
    let svg = out.join(format!("scene_{scenario}_t{timestep}.svg"));
    write_text(&svg, &figures::scene_svg(&sc.scene, &pose, &full))?;
    Ok(SceneOutput {
        rays_csv,
        objects_csv,
        svg,
    })
}

pub fn cmd_serve(
    checkpoint: &Path,
    scenarios: Option<&Path>,
    seed: u64,
    port: u16,
    tick: Duration,
) -> Result<(), CliError> {
    let policy = load_checkpoint(checkpoint)?;
    let set = load_or_generate_scenarios(scenarios, seed)?;
    let settings = StudySettings {
        seed,
        ..StudySettings::default()
    };
    let manager = Arc::new(SessionManager::new(StudyContext::new(&policy, set, settings)?));
    let addr = SocketAddr::from(([0, 0, 0, 0], port));
    let runtime = tokio::runtime::Runtime::new().map_err(io_err(Path::new("tokio runtime")))?;
    runtime
        .block_on(bind_and_serve(addr, manager, ServerConfig { tick }))
        .map_err(|e| CliError::Io {
            path: PathBuf::from(addr.to_string()),
            source: e,
        })
}
