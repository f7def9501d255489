//! Navigation reward: the five shaped terms, the terminal bonus/penalty, and
//! the four-objective regrouping used by the multi-objective learner.
//!
//! The scalar reward and the unit-weight scalarization of the vector reward
//! are computed with the same grouping of floating-point additions, so
//! `scalarize(vector_reward(x, s), UNIT) == scalar_reward(reward_terms(x), s)`
//! holds bit-for-bit, not just approximately.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Linear speed at which the linear-velocity term vanishes; also the
/// obstacle proximity threshold.
pub const SPEED_REF: f64 = 0.22;
pub const OBSTACLE_THRESHOLD: f64 = 0.22;
pub const OBSTACLE_PENALTY: f64 = -20.0;
pub const SUCCESS_BONUS: f64 = 2500.0;
pub const COLLISION_PENALTY: f64 = -2000.0;
pub const STEP_PENALTY: f64 = -1.0;

/// Number of objectives in a [`RewardVector`].
pub const NUM_OBJECTIVES: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("invalid reward input: {0}")]
    InvalidInput(String),
    #[error("invalid scalarization weights: {0}")]
    InvalidWeights(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EpisodeStatus {
    Ongoing,
    Success,
    CollisionObstacle,
    CollisionWall,
    Timeout,
}

impl EpisodeStatus {
    pub const ALL: [EpisodeStatus; 5] = [
        EpisodeStatus::Ongoing,
        EpisodeStatus::Success,
        EpisodeStatus::CollisionObstacle,
        EpisodeStatus::CollisionWall,
        EpisodeStatus::Timeout,
    ];

    pub fn is_terminal(self) -> bool {
        self != EpisodeStatus::Ongoing
    }

    pub fn is_collision(self) -> bool {
        matches!(
            self,
            EpisodeStatus::CollisionObstacle | EpisodeStatus::CollisionWall
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EpisodeStatus::Ongoing => "ONGOING",
            EpisodeStatus::Success => "SUCCESS",
            EpisodeStatus::CollisionObstacle => "COLLISION_OBSTACLE",
            EpisodeStatus::CollisionWall => "COLLISION_WALL",
            EpisodeStatus::Timeout => "TIMEOUT",
        }
    }
}

impl fmt::Display for EpisodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EpisodeStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EpisodeStatus::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown episode status `{s}`"))
    }
}

/// Everything the reward function looks at for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardInput {
    pub action_linear: f64,
    pub action_angular: f64,
    pub goal_dist: f64,
    pub goal_angle: f64,
    pub goal_dist_initial: f64,
    pub min_obstacle_dist: f64,
}

impl RewardInput {
    fn validate(&self) -> Result<(), RewardError> {
        let fields = [
            ("action_linear", self.action_linear),
            ("action_angular", self.action_angular),
            ("goal_dist", self.goal_dist),
            ("goal_angle", self.goal_angle),
            ("goal_dist_initial", self.goal_dist_initial),
            ("min_obstacle_dist", self.min_obstacle_dist),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(RewardError::InvalidInput(format!("{name} is not finite ({v})")));
        }
        if self.goal_dist_initial <= 0.0 {
            return Err(RewardError::InvalidInput(format!(
                "goal_dist_initial must be > 0, got {}",
                self.goal_dist_initial
            )));
        }
        if self.goal_dist < 0.0 {
            return Err(RewardError::InvalidInput(format!(
                "goal_dist must be >= 0, got {}",
                self.goal_dist
            )));
        }
        if self.min_obstacle_dist < 0.0 {
            return Err(RewardError::InvalidInput(format!(
                "min_obstacle_dist must be >= 0, got {}",
                self.min_obstacle_dist
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardTerms {
    pub r_yaw: f64,
    pub r_vangular: f64,
    pub r_distance: f64,
    pub r_obstacle: f64,
    pub r_vlinear: f64,
}

pub fn reward_terms(input: &RewardInput) -> Result<RewardTerms, RewardError> {
    input.validate()?;
    let r_yaw = -1.0 * input.goal_angle.abs();
    let r_vangular = -1.0 * (input.action_angular * input.action_angular);
    let r_distance = 0.5
        * (2.0 * input.goal_dist_initial / (input.goal_dist_initial + input.goal_dist) - 1.0);
    let r_obstacle = if input.min_obstacle_dist < OBSTACLE_THRESHOLD {
        OBSTACLE_PENALTY
    } else {
        0.0
    };
    let lin = (SPEED_REF - input.action_linear) * 10.0;
    let r_vlinear = -2.0 * (lin * lin);
    Ok(RewardTerms {
        r_yaw,
        r_vangular,
        r_distance,
        r_obstacle,
        r_vlinear,
    })
}

fn goal_bonus(status: EpisodeStatus) -> Option<f64> {
    (status == EpisodeStatus::Success).then_some(SUCCESS_BONUS)
}

fn safety_penalty(status: EpisodeStatus) -> Option<f64> {
    status.is_collision().then_some(COLLISION_PENALTY)
}

/// Per-step scalar reward including the terminal bonus or penalty.
///
/// The sum is grouped as goal-seeking + safety + motion + per-step penalty so
/// that it coincides exactly with the unit-weight scalarization of
/// [`vector_reward`].
pub fn scalar_reward(terms: &RewardTerms, status: EpisodeStatus) -> f64 {
    let mut goal = terms.r_yaw + terms.r_distance;
    if let Some(b) = goal_bonus(status) {
        goal += b;
    }
    let mut safety = terms.r_obstacle;
    if let Some(p) = safety_penalty(status) {
        safety += p;
    }
    let motion = terms.r_vlinear + terms.r_vangular;
    0.0 + goal + safety + motion + STEP_PENALTY
}

/// Four-objective reward: goal seeking, safety, motion efficiency, time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardVector(pub [f64; NUM_OBJECTIVES]);

impl RewardVector {
    pub fn new(goal_seeking: f64, safety: f64, motion_efficiency: f64, time: f64) -> Self {
        Self([goal_seeking, safety, motion_efficiency, time])
    }

    pub fn from_terms(terms: &RewardTerms, status: EpisodeStatus) -> Self {
        let mut goal = terms.r_yaw + terms.r_distance;
        if let Some(b) = goal_bonus(status) {
            goal += b;
        }
        let mut safety = terms.r_obstacle;
        if let Some(p) = safety_penalty(status) {
            safety += p;
        }
        Self([goal, safety, terms.r_vlinear + terms.r_vangular, STEP_PENALTY])
    }

    pub fn goal_seeking(&self) -> f64 {
        self.0[0]
    }
    pub fn safety(&self) -> f64 {
        self.0[1]
    }
    pub fn motion_efficiency(&self) -> f64 {
        self.0[2]
    }
    pub fn time(&self) -> f64 {
        self.0[3]
    }

    pub fn as_array(&self) -> [f64; NUM_OBJECTIVES] {
        self.0
    }

    pub fn add_assign(&mut self, other: &RewardVector) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }
}

pub fn vector_reward(
    input: &RewardInput,
    status: EpisodeStatus,
) -> Result<RewardVector, RewardError> {
    Ok(RewardVector::from_terms(&reward_terms(input)?, status))
}

/// Validated nonnegative, not-all-zero scalarization weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights([f64; NUM_OBJECTIVES]);

impl Weights {
    pub const UNIT: Weights = Weights([1.0; NUM_OBJECTIVES]);

    pub fn new(w: [f64; NUM_OBJECTIVES]) -> Result<Self, RewardError> {
        if let Some(bad) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(RewardError::InvalidWeights(format!(
                "weights must be finite and >= 0, got {bad}"
            )));
        }
        if w.iter().all(|x| *x == 0.0) {
            return Err(RewardError::InvalidWeights("weights are all zero".into()));
        }
        Ok(Self(w))
    }

    pub fn as_array(&self) -> [f64; NUM_OBJECTIVES] {
        self.0
    }
}

impl TryFrom<&[f64]> for Weights {
    type Error = RewardError;

    fn try_from(w: &[f64]) -> Result<Self, Self::Error> {
        let arr: [f64; NUM_OBJECTIVES] = w.try_into().map_err(|_| {
            RewardError::InvalidWeights(format!(
                "expected {NUM_OBJECTIVES} weights, got {}",
                w.len()
            ))
        })?;
        Weights::new(arr)
    }
}

/// Linear scalarization (dot product).
pub fn scalarize(vec: &RewardVector, weights: &Weights) -> f64 {
    vec.0
        .iter()
        .zip(weights.0.iter())
        .fold(0.0, |acc, (v, w)| acc + v * w)
}

/// Checked variant for raw weight slices.
pub fn scalarize_raw(vec: &RewardVector, weights: &[f64]) -> Result<f64, RewardError> {
    Ok(scalarize(vec, &Weights::try_from(weights)?))
}
