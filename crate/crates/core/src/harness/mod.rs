//! Run orchestration: configuration, training and evaluation loops, metrics
//! files, weight sweeps and reward plots.

mod config;
mod eval;
mod metrics;
mod plot;
mod sweep;
mod train;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::agents::AgentError;
use crate::nn::NnError;
use crate::pareto::ParetoError;
use crate::replay::ReplayError;
use crate::reward::RewardError;
use crate::sim::SimError;

pub use config::{parse_config, parse_config_str, RunConfig, CONFIG_KEYS};
pub use eval::{evaluate_policy, run_eval, EvalReport};
pub use metrics::{read_metrics, EpisodeRecord, MetricsWriter, METRICS_HEADER};
pub use plot::{emit_reward_graph, moving_average};
pub use sweep::{default_weight_grid, parse_weight_grid, run_weight_sweep, SweepOutcome};
pub use train::{run_training, train_agent, TrainingRun};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("{}:{line}: unknown key `{key}`", path.display())]
    UnknownKey { path: PathBuf, line: usize, key: String },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Pareto(#[from] ParetoError),
}

impl From<ReplayError> for HarnessError {
    fn from(e: ReplayError) -> Self {
        HarnessError::Agent(AgentError::Replay(e))
    }
}

impl From<NnError> for HarnessError {
    fn from(e: NnError) -> Self {
        HarnessError::Agent(AgentError::Nn(e))
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| {
        if source.kind() == io::ErrorKind::NotFound {
            HarnessError::NotFound(path.to_path_buf())
        } else {
            HarnessError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }
}
