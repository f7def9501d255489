use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use navmorl::harness::{
    default_weight_grid, emit_reward_graph, parse_config, parse_weight_grid, run_eval, run_weight_sweep,
    train_agent, HarnessError,
};
use navmorl::EpisodeStatus;

#[derive(Parser)]
#[command(name = "navmorl", version, about = "Robot navigation RL workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write metrics.csv plus checkpoints.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint without learning.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train one MO-TD3 agent per weight vector and archive the front.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Weight grid file, or `default` for {0, 0.5, 1}^4 minus zero.
        #[arg(long)]
        grid: String,
    },
    /// Render smoothed reward curves of metrics files to SVG.
    Plot {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        window: u64,
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
    },
}

fn run(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::Train { config, seed, out } => {
            let mut cfg = parse_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let run = train_agent(&cfg)?;
            let tail = &run.records[run.records.len().saturating_sub(100)..];
            let successes = tail.iter().filter(|r| r.status == EpisodeStatus::Success).count();
            let mean = tail.iter().map(|r| r.total_reward).sum::<f64>() / tail.len() as f64;
            println!("episodes: {}", run.records.len());
            println!("final_{}_success_rate: {}", tail.len(), successes as f64 / tail.len() as f64);
            println!("final_{}_mean_reward: {mean}", tail.len());
            println!("metrics: {}", cfg.output_dir.join("metrics.csv").display());
            println!("checkpoint: {}", run.final_checkpoint.display());
        }
        Command::Eval { config, checkpoint } => {
            let cfg = parse_config(&config)?;
            let r = run_eval(&cfg, &checkpoint)?;
            println!("episodes: {}", r.episodes);
            println!("success_rate: {}", r.success_rate);
            println!("collision_rate: {}", r.collision_rate);
            println!("timeout_rate: {}", r.timeout_rate);
            println!("mean_total_reward: {}", r.mean_total_reward);
            let v = r.mean_objective_vector.map(|x| x.to_string());
            println!("mean_objective_vector: {}", v.join(","));
        }
        Command::Sweep { config, grid } => {
            let cfg = parse_config(&config)?;
            let grid = if grid == "default" {
                default_weight_grid()
            } else {
                parse_weight_grid(&PathBuf::from(grid))?
            };
            let out = run_weight_sweep(&cfg, &grid)?;
            let failed = out.rows.iter().filter(|r| r.objectives.is_none()).count();
            println!("cells: {}", out.rows.len());
            println!("failed: {failed}");
            println!("front_points: {}", out.archive.len());
            println!("archive: {}", out.csv_path.display());
        }
        Command::Plot { out, window, metrics } => {
            emit_reward_graph(&metrics, &out, window as usize)?;
            println!("plot: {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
