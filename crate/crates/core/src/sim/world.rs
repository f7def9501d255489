use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::geometry::{ray_circle, ray_segment, wrap_angle};
use super::stage::StageSpec;
use super::SimError;
use crate::reward::{EpisodeStatus, RewardInput};

pub const MAX_LINEAR: f64 = 0.22;
pub const MAX_ANGULAR: f64 = 2.0;
/// Extra robot clearance demanded at placement, on top of the robot radius.
pub const PLACEMENT_MARGIN: f64 = 0.05;
pub const MIN_START_GOAL_SEPARATION: f64 = 1.0;
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Heading in (−π, π].
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }
}

/// Velocity command. Constructed values are always within bounds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Action {
    linear: f64,
    angular: f64,
}

impl Action {
    /// Clamps both components into their admissible ranges. NaN maps to 0.
    pub fn new(linear: f64, angular: f64) -> Self {
        let fix = |v: f64| if v.is_nan() { 0.0 } else { v };
        Self {
            linear: fix(linear).clamp(0.0, MAX_LINEAR),
            angular: fix(angular).clamp(-MAX_ANGULAR, MAX_ANGULAR),
        }
    }

    /// Rejects out-of-range components instead of clamping them.
    pub fn try_new(linear: f64, angular: f64) -> Result<Self, SimError> {
        if !(0.0..=MAX_LINEAR).contains(&linear) || !(-MAX_ANGULAR..=MAX_ANGULAR).contains(&angular) {
            return Err(SimError::InvalidAction { linear, angular });
        }
        Ok(Self { linear, angular })
    }

    /// Maps a normalized command in [−1, 1]² onto the action box.
    pub fn from_normalized(u: [f64; 2]) -> Self {
        let l = (u[0].clamp(-1.0, 1.0) + 1.0) * 0.5 * MAX_LINEAR;
        Self::new(l, u[1].clamp(-1.0, 1.0) * MAX_ANGULAR)
    }

    pub fn to_normalized(&self) -> [f64; 2] {
        [self.linear / MAX_LINEAR * 2.0 - 1.0, self.angular / MAX_ANGULAR]
    }

    pub fn linear(&self) -> f64 {
        self.linear
    }

    pub fn angular(&self) -> f64 {
        self.angular
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub lidar_ranges: Vec<f64>,
    pub goal_dist: f64,
    pub goal_angle: f64,
    pub prev_action: Action,
}

impl Observation {
    /// Length of [`Observation::features`] for a stage.
    pub fn feature_len(spec: &StageSpec) -> usize {
        spec.lidar.beams + 4
    }

    /// Normalized network input: scaled ranges, goal distance over the arena
    /// diagonal, goal bearing over π, previous command in [−1, 1].
    pub fn features(&self, spec: &StageSpec) -> Vec<f64> {
        let diag = 2.0 * std::f64::consts::SQRT_2 * spec.inner_half_extent();
        let mut f = Vec::with_capacity(Self::feature_len(spec));
        f.extend(self.lidar_ranges.iter().map(|r| r / spec.lidar.max_range));
        f.push(self.goal_dist / diag);
        f.push(self.goal_angle / PI);
        f.push(self.prev_action.linear / MAX_LINEAR);
        f.push(self.prev_action.angular / MAX_ANGULAR);
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub reward_input: RewardInput,
    pub status: EpisodeStatus,
    pub done: bool,
}

/// Distance and bearing (relative to heading) from the robot to the goal.
pub fn goal_polar(robot: &Pose, goal: (f64, f64)) -> (f64, f64) {
    let dx = goal.0 - robot.x;
    let dy = goal.1 - robot.y;
    (dx.hypot(dy), wrap_angle(dy.atan2(dx) - robot.theta))
}

#[derive(Debug, Clone)]
pub struct World {
    spec: StageSpec,
    robot: Pose,
    goal: (f64, f64),
    goal_dist_initial: f64,
    sim_time: f64,
    step_count: u32,
    rng: ChaCha8Rng,
    status: EpisodeStatus,
    prev_action: Action,
}

impl World {
    /// Validates the stage and performs an initial seed-0 reset.
    pub fn new(spec: StageSpec) -> Result<Self, SimError> {
        let mut w = Self::with_placement(spec, Pose::default(), (1.0, 0.0))?;
        w.reset(0)?;
        Ok(w)
    }

    /// World with an explicit robot pose and goal, bypassing placement rules.
    pub fn with_placement(spec: StageSpec, robot: Pose, goal: (f64, f64)) -> Result<Self, SimError> {
        spec.validate()?;
        let robot = Pose::new(robot.x, robot.y, robot.theta);
        let (goal_dist_initial, _) = goal_polar(&robot, goal);
        Ok(Self {
            spec,
            robot,
            goal,
            goal_dist_initial,
            sim_time: 0.0,
            step_count: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
            status: EpisodeStatus::Ongoing,
            prev_action: Action::default(),
        })
    }

    pub fn spec(&self) -> &StageSpec {
        &self.spec
    }
    pub fn robot(&self) -> Pose {
        self.robot
    }
    pub fn goal(&self) -> (f64, f64) {
        self.goal
    }
    pub fn goal_dist_initial(&self) -> f64 {
        self.goal_dist_initial
    }
    pub fn sim_time(&self) -> f64 {
        self.sim_time
    }
    pub fn step_count(&self) -> u32 {
        self.step_count
    }
    pub fn status(&self) -> EpisodeStatus {
        self.status
    }

    pub fn obstacle_centers(&self) -> Vec<(f64, f64)> {
        self.spec
            .obstacles
            .iter()
            .map(|o| o.center_at(self.sim_time))
            .collect()
    }

    /// Samples a fresh start pose and goal. Identical seeds give identical
    /// episodes.
    pub fn reset(&mut self, seed: u64) -> Result<Observation, SimError> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.sim_time = 0.0;
        self.step_count = 0;
        self.status = EpisodeStatus::Ongoing;
        self.prev_action = Action::default();

        let h = self.spec.inner_half_extent();
        let robot_clear = self.spec.robot_radius + PLACEMENT_MARGIN;
        let goal_wall_clear = self.spec.goal_radius + self.spec.robot_radius;
        let centers = self.obstacle_centers();
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let rx = self.sample_coord(h, robot_clear);
            let ry = self.sample_coord(h, robot_clear);
            let theta = wrap_angle(self.rng.random_range(-PI..PI));
            let gx = self.sample_coord(h, goal_wall_clear);
            let gy = self.sample_coord(h, goal_wall_clear);
            let (Some(rx), Some(ry), Some(gx), Some(gy)) = (rx, ry, gx, gy) else {
                continue;
            };
            let robot_ok = self
                .spec
                .obstacles
                .iter()
                .zip(&centers)
                .all(|(o, c)| (rx - c.0).hypot(ry - c.1) - o.radius >= robot_clear);
            let goal_ok = self
                .spec
                .obstacles
                .iter()
                .zip(&centers)
                .all(|(o, c)| (gx - c.0).hypot(gy - c.1) - o.radius >= self.spec.goal_radius);
            if robot_ok && goal_ok && (gx - rx).hypot(gy - ry) >= MIN_START_GOAL_SEPARATION {
                self.robot = Pose::new(rx, ry, theta);
                self.goal = (gx, gy);
                self.goal_dist_initial = (gx - rx).hypot(gy - ry);
                return Ok(self.observe());
            }
        }
        Err(SimError::PlacementFailed {
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })
    }

    fn sample_coord(&mut self, h: f64, clearance: f64) -> Option<f64> {
        let lim = h - clearance;
        // Always draw so the stream advances identically on every attempt.
        let u: f64 = self.rng.random_range(-1.0..1.0);
        (lim > 0.0).then_some(u * lim)
    }

    /// Advances obstacles and robot by one tick and classifies the outcome.
    pub fn step(&mut self, action: Action) -> Result<(Observation, StepInfo), SimError> {
        if self.status.is_terminal() {
            return Err(SimError::EpisodeFinished(self.status));
        }
        let action = Action::new(action.linear, action.angular);
        let dt = self.spec.dt;
        let (v, w) = (action.linear, action.angular);
        self.robot.x += v * self.robot.theta.cos() * dt;
        self.robot.y += v * self.robot.theta.sin() * dt;
        self.robot.theta = wrap_angle(self.robot.theta + w * dt);
        self.sim_time += dt;
        self.step_count += 1;
        self.prev_action = action;

        let (obstacle_dist, wall_dist) = self.surface_distances();
        let (goal_dist, goal_angle) = goal_polar(&self.robot, self.goal);
        let r = self.spec.robot_radius;
        self.status = if obstacle_dist < r {
            EpisodeStatus::CollisionObstacle
        } else if wall_dist < r {
            EpisodeStatus::CollisionWall
        } else if goal_dist < self.spec.goal_radius {
            EpisodeStatus::Success
        } else if self.step_count >= self.spec.time_limit {
            EpisodeStatus::Timeout
        } else {
            EpisodeStatus::Ongoing
        };

        let info = StepInfo {
            reward_input: RewardInput {
                action_linear: v,
                action_angular: w,
                goal_dist,
                goal_angle,
                goal_dist_initial: self.goal_dist_initial,
                min_obstacle_dist: obstacle_dist.min(wall_dist).max(0.0),
            },
            status: self.status,
            done: self.status.is_terminal(),
        };
        Ok((self.observe(), info))
    }

    /// Current observation without advancing time.
    pub fn observe(&self) -> Observation {
        let (goal_dist, goal_angle) = goal_polar(&self.robot, self.goal);
        Observation {
            lidar_ranges: self.lidar_scan(),
            goal_dist,
            goal_angle,
            prev_action: self.prev_action,
        }
    }

    /// Unclamped surface distances (nearest obstacle, nearest wall face).
    fn surface_distances(&self) -> (f64, f64) {
        let (x, y) = (self.robot.x, self.robot.y);
        let obstacle = self
            .spec
            .obstacles
            .iter()
            .map(|o| {
                let c = o.center_at(self.sim_time);
                (x - c.0).hypot(y - c.1) - o.radius
            })
            .fold(f64::INFINITY, f64::min);
        let h = self.spec.inner_half_extent();
        let wall = (h - x).min(h + x).min(h - y).min(h + y);
        (obstacle, wall)
    }

    /// Exact distance from the robot center to the nearest obstacle or wall
    /// surface, clamped at zero.
    pub fn min_obstacle_distance(&self) -> f64 {
        let (o, w) = self.surface_distances();
        o.min(w).max(0.0)
    }

    /// Analytic ray cast, beam `k` at heading + 2πk/beams.
    pub fn lidar_scan(&self) -> Vec<f64> {
        let lidar = self.spec.lidar;
        let origin = (self.robot.x, self.robot.y);
        let centers = self.obstacle_centers();
        let walls = self.spec.wall_segments();
        (0..lidar.beams)
            .map(|k| {
                let a = self.robot.theta + TAU * k as f64 / lidar.beams as f64;
                let dir = (a.cos(), a.sin());
                let mut best = lidar.max_range;
                for (o, c) in self.spec.obstacles.iter().zip(&centers) {
                    if let Some(t) = ray_circle(origin, dir, *c, o.radius) {
                        best = best.min(t);
                    }
                }
                for (p, q) in walls {
                    if let Some(t) = ray_segment(origin, dir, p, q) {
                        best = best.min(t);
                    }
                }
                best.clamp(0.0, lidar.max_range)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::stage::{stage_build, Obstacle};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn stage0() -> StageSpec {
        stage_build("stage0").unwrap()
    }

    #[test]
    fn reset_is_seeded() {
        let mut a = World::new(stage0()).unwrap();
        let mut b = World::new(stage0()).unwrap();
        let oa = a.reset(7).unwrap();
        let ob = b.reset(7).unwrap();
        assert_eq!(oa, ob);
        assert_eq!(a.robot(), b.robot());
        assert_eq!(a.goal(), b.goal());
    }

    #[test]
    fn reset_goals_vary_with_seed() {
        let mut w = World::new(stage0()).unwrap();
        let mut goals: Vec<(u64, u64)> = (0..100)
            .map(|s| {
                w.reset(s).unwrap();
                let g = w.goal();
                (g.0.to_bits(), g.1.to_bits())
            })
            .collect();
        goals.sort();
        goals.dedup();
        assert!(goals.len() >= 95);
    }

    #[test]
    fn zero_action_keeps_pose() {
        let mut w = World::new(stage0()).unwrap();
        w.reset(3).unwrap();
        let before = w.robot();
        let (_, info) = w.step(Action::new(0.0, 0.0)).unwrap();
        assert_eq!(w.robot(), before);
        assert_eq!(w.step_count(), 1);
        assert!(!info.done);
    }

    #[test]
    fn euler_step_forward() {
        let mut w = World::with_placement(stage0(), Pose::new(0.0, 0.0, 0.0), (1.5, 1.5)).unwrap();
        w.step(Action::new(0.22, 0.0)).unwrap();
        assert!((w.robot().x - 0.022).abs() < 1e-15);
        assert_eq!(w.robot().y, 0.0);
    }

    #[test]
    fn collision_threshold() {
        let mut spec = stage0();
        spec.obstacles.push(Obstacle::fixed(1.0, 0.0, 0.3));
        // Surface 0.10 m away, robot radius 0.105.
        let mut w = World::with_placement(spec, Pose::new(0.6, 0.0, PI), (-1.5, 0.0)).unwrap();
        let (_, info) = w.step(Action::new(0.0, 0.0)).unwrap();
        assert_eq!(info.status, EpisodeStatus::CollisionObstacle);
        assert!(info.done);
        assert!(matches!(
            w.step(Action::new(0.0, 0.0)),
            Err(SimError::EpisodeFinished(EpisodeStatus::CollisionObstacle))
        ));
    }

    #[test]
    fn wall_collision_and_timeout() {
        let spec = stage0();
        let h = spec.inner_half_extent();
        let mut w = World::with_placement(spec.clone(), Pose::new(h - 0.1, 0.0, 0.0), (0.0, 0.0)).unwrap();
        let (_, info) = w.step(Action::new(0.0, 0.0)).unwrap();
        assert_eq!(info.status, EpisodeStatus::CollisionWall);

        let mut spec = spec;
        spec.time_limit = 3;
        let mut w = World::with_placement(spec, Pose::new(0.0, 0.0, 0.0), (2.0, 2.0)).unwrap();
        for _ in 0..2 {
            assert_eq!(w.step(Action::new(0.0, 0.0)).unwrap().1.status, EpisodeStatus::Ongoing);
        }
        let (_, info) = w.step(Action::new(0.0, 0.0)).unwrap();
        assert_eq!(info.status, EpisodeStatus::Timeout);
        assert!(info.done);
    }

    #[test]
    fn collision_outranks_success() {
        let mut spec = stage0();
        spec.obstacles.push(Obstacle::fixed(0.3, 0.0, 0.25));
        let mut w = World::with_placement(spec, Pose::new(0.0, 0.0, 0.0), (0.05, 0.0)).unwrap();
        let (_, info) = w.step(Action::new(0.0, 0.0)).unwrap();
        assert_eq!(info.status, EpisodeStatus::CollisionObstacle);
    }

    #[test]
    fn success_on_goal() {
        let mut w = World::with_placement(stage0(), Pose::new(0.0, 0.0, 0.0), (0.2, 0.0)).unwrap();
        let (_, info) = w.step(Action::new(0.22, 0.0)).unwrap();
        assert_eq!(info.status, EpisodeStatus::Success);
    }

    #[test]
    fn lidar_examples() {
        let mut spec = stage0();
        spec.arena_half_extent = 5.0;
        spec.wall_thickness = 0.0;
        let w = World::with_placement(spec.clone(), Pose::default(), (1.0, 1.0)).unwrap();
        assert!(w.lidar_scan().iter().all(|&r| r == 3.5));

        let mut s = spec.clone();
        s.obstacles.push(Obstacle::fixed(2.0, 0.0, 0.3));
        let w = World::with_placement(s, Pose::default(), (1.0, 1.0)).unwrap();
        assert!((w.lidar_scan()[0] - 1.7).abs() < 1e-12);

        let w = World::with_placement(spec, Pose::new(4.0, 0.5, 0.0), (1.0, 1.0)).unwrap();
        assert!((w.lidar_scan()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn min_distance_examples() {
        let mut spec = stage0();
        spec.arena_half_extent = 5.0;
        let w = World::with_placement(spec.clone(), Pose::default(), (1.0, 1.0)).unwrap();
        assert!((w.min_obstacle_distance() - (5.0 - 0.5 * spec.wall_thickness)).abs() < 1e-12);

        spec.obstacles.push(Obstacle::fixed(0.0, 1.0, 0.3));
        let w = World::with_placement(spec.clone(), Pose::default(), (1.0, 1.0)).unwrap();
        assert!((w.min_obstacle_distance() - 0.7).abs() < 1e-12);

        let w = World::with_placement(spec, Pose::new(0.0, 0.9, 0.0), (1.0, 1.0)).unwrap();
        assert_eq!(w.min_obstacle_distance(), 0.0);
    }

    #[test]
    fn goal_polar_examples() {
        let (d, a) = goal_polar(&Pose::new(0.0, 0.0, 0.0), (1.0, 0.0));
        assert_eq!((d, a), (1.0, 0.0));
        let (d, a) = goal_polar(&Pose::new(0.0, 0.0, 0.0), (1.0, 1.0));
        assert!((d - SQRT_2).abs() < 1e-15 && (a - FRAC_PI_4).abs() < 1e-15);
        let (d, a) = goal_polar(&Pose::new(0.0, 0.0, FRAC_PI_2), (0.0, 2.0));
        assert_eq!((d, a), (2.0, 0.0));
    }

    #[test]
    fn action_clamps() {
        let a = Action::new(1.0, -9.0);
        assert_eq!((a.linear(), a.angular()), (0.22, -2.0));
        assert!(Action::try_new(0.3, 0.0).is_err());
        let n = Action::from_normalized([1.0, -1.0]);
        assert_eq!((n.linear(), n.angular()), (0.22, -2.0));
        let n = Action::from_normalized([-1.0, 0.0]);
        assert_eq!((n.linear(), n.angular()), (0.0, 0.0));
    }
}
