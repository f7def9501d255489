//! Robot-navigation reinforcement-learning workbench.
//!
//! * [`sim`]: deterministic 2D kinematic arena with LiDAR and moving obstacles.
//! * [`reward`]: shaped scalar reward and its four-objective decomposition.
//! * [`nn`]: dense MLPs with exact backprop, Adam, Polyak updates, checkpoints.
//! * [`replay`]: fixed-capacity experience replay.
//! * [`agents`]: DQN, DDPG, TD3 and scalarized multi-objective TD3.
//! * [`pareto`]: dominance, fronts, archive and hypervolume.
//! * [`harness`]: config parsing, training/evaluation loops, weight sweeps,
//!   metrics CSV and SVG reward graphs.

pub mod agents;
pub mod harness;
pub mod nn;
pub mod pareto;
pub mod replay;
pub mod reward;
pub mod sim;

pub use agents::{AgentConfig, AgentKind};
pub use reward::{EpisodeStatus, RewardInput, RewardTerms, RewardVector, Weights};
pub use sim::{Action, Observation, Pose, StageSpec, World};
