//! Deterministic 2D kinematic navigation environment.
//!
//! A unicycle robot moves inside a square walled arena populated with static
//! and sinusoidally oscillating circular obstacles. Each episode starts from a
//! seeded placement of robot and goal and ends on reaching the goal, hitting
//! an obstacle or wall, or exhausting the step budget.

mod geometry;
mod stage;
mod world;

use thiserror::Error;

use crate::reward::EpisodeStatus;

pub use geometry::{ray_circle, ray_segment, wrap_angle};
pub use stage::{stage_build, LidarSpec, Motion, Obstacle, StageSpec, STAGE_NAMES};
pub use world::{
    goal_polar, Action, Observation, Pose, StepInfo, World, MAX_ANGULAR, MAX_LINEAR,
    MAX_PLACEMENT_ATTEMPTS, MIN_START_GOAL_SEPARATION, PLACEMENT_MARGIN,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("unknown stage `{0}`")]
    NotFound(String),
    #[error("invalid stage spec: {0}")]
    InvalidSpec(String),
    #[error("no valid robot/goal placement after {attempts} attempts")]
    PlacementFailed { attempts: usize },
    #[error("episode already finished with status {0}; reset first")]
    EpisodeFinished(EpisodeStatus),
    #[error("action out of bounds: linear={linear}, angular={angular}")]
    InvalidAction { linear: f64, angular: f64 },
}
