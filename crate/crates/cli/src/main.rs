use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use lidarxai_cli::*;

#[derive(Parser)]
#[command(name = "lidarxai", version, about = "Lidar navigation policy attribution toolkit")]
struct Cli {
    /// Default location for checkpoints, scenarios and outputs.
    #[arg(long, env = DATA_DIR_ENV, global = true)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy with TD3 and write the checkpoint and training log.
    Train {
        /// JSON training config; defaults are used for missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory [default: data dir].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deterministic rollouts without exploration noise.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Scenario file; without it, fresh training scenes are drawn from --seed.
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[arg(long, default_value_t = 12345)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
    },
    /// Generate the study scenario set.
    Scenarios {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 48)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Headless counterbalanced study with a baseline ranker; writes the long-format CSV.
    Study {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Scenario file; without it, the set is generated from --seed.
        #[arg(long)]
        scenarios: Option<PathBuf>,
        /// oracle, proximity, path-proximity, front-cone or random.
        #[arg(long, default_value = "proximity")]
        strategy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the session API.
    Serve {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Milliseconds between streamed frames.
        #[arg(long, default_value_t = 100)]
        tick_ms: u64,
    },
    /// Write per-scenario attribution traces of every trial tick.
    Trace {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Histograms of raw lidar and goal gradients and of g* from trace files.
    ExportHist {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Top-down map of one trial tick with rays colored by attribution.
    ExportScene {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        scenario: u32,
        #[arg(long, default_value_t = 29)]
        timestep: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let data = cli.data_dir.unwrap_or_else(data_dir);
    let checkpoint = |c: Option<PathBuf>| c.unwrap_or_else(|| data.join(CHECKPOINT_FILE));
    let out_dir = |o: Option<PathBuf>| o.unwrap_or_else(|| data.clone());
    match cli.command {
        Command::Train { config, steps, seed, out } => {
            let args = TrainArgs {
                config,
                steps,
                seed,
                out: out_dir(out),
            };
            let result = cmd_train(&args, |line| eprintln!("{line}"))?;
            let log = &result.log;
            println!(
                "trained {} steps over {} episodes (goal {}, collision {}, timeout {})",
                result.config.total_steps,
                log.episodes.len(),
                log.count(lidarxai_core::world::Outcome::Goal),
                log.count(lidarxai_core::world::Outcome::Collision),
                log.count(lidarxai_core::world::Outcome::Timeout),
            );
            println!("checkpoint {}", result.checkpoint.display());
        }
        Command::Eval {
            checkpoint: c,
            scenarios,
            seed,
            episodes,
        } => {
            let report = cmd_eval(&checkpoint(c), scenarios.as_deref(), seed, episodes)?;
            print!("{}", format_eval(&report));
        }
        Command::Scenarios { seed, count, out } => {
            let path = out.unwrap_or_else(|| data.join(SCENARIOS_FILE));
            let set = cmd_scenarios(seed, count, &path)?;
            println!("{} scenarios written to {}", set.scenarios.len(), path.display());
        }
        Command::Study {
            checkpoint: c,
            scenarios,
            strategy,
            seed,
            out,
        } => {
            let result = cmd_study(&checkpoint(c), scenarios.as_deref(), &strategy, seed)?;
            match out {
                Some(path) => {
                    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                        std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
                            path: parent.to_path_buf(),
                            source,
                        })?;
                    }
                    std::fs::write(&path, &result.csv).map_err(|source| CliError::Io { path, source })?;
                    print!("{}", format_aggregate(&result.aggregate));
                }
                None => print!("{}", result.csv),
            }
        }
        Command::Serve {
            checkpoint: c,
            scenarios,
            seed,
            port,
            tick_ms,
        } => {
            eprintln!("serving on port {port}");
            cmd_serve(&checkpoint(c), scenarios.as_deref(), seed, port, Duration::from_millis(tick_ms))?;
        }
        Command::Trace {
            checkpoint: c,
            scenarios,
            seed,
            out,
        } => {
            let dir = out.unwrap_or_else(|| data.join("traces"));
            let paths = cmd_trace(&checkpoint(c), scenarios.as_deref(), seed, &dir)?;
            println!("{} traces written to {}", paths.len(), dir.display());
        }
        Command::ExportHist { traces, bins, out } => {
            let result = cmd_export_hist(&traces, bins, &out_dir(out))?;
            let s = result.stats;
            println!("rows {}  lidar entries {}", result.rows, s.lidar_count);
            println!(
                "lidar >= -1e-3: {:.3}  lidar IQR {:.3e}  goal IQR {:.3e}",
                s.lidar_nonnegative, s.lidar_iqr, s.goal_iqr
            );
            println!("{}\n{}", result.csv.display(), result.svg.display());
        }
        Command::ExportScene {
            checkpoint: c,
            scenarios,
            seed,
            scenario,
            timestep,
            out,
        } => {
            let result = cmd_export_scene(&checkpoint(c), scenarios.as_deref(), seed, scenario, timestep, &out_dir(out))?;
            println!(
                "{}\n{}\n{}",
                result.rays_csv.display(),
                result.objects_csv.display(),
                result.svg.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
