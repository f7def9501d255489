//! Flat `key=value` run configuration.
//!
//! One assignment per line, `#` starts a comment, dotted keys address nested
//! settings (`agent.gamma=0.97`). `stage.obstacle` may repeat; the first such
//! line discards the preset's obstacles. Obstacle syntax:
//!
//! ```text
//! stage.obstacle=static X Y R
//! stage.obstacle=osc X Y R AXIS_X AXIS_Y AMPLITUDE PERIOD PHASE
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{io_err, HarnessError};
use crate::agents::{AgentConfig, AgentKind};
use crate::reward::Weights;
use crate::sim::{stage_build, Obstacle, StageSpec};

/// Every accepted key with its default, in documentation order.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("stage", "stageA"),
    ("algo", "td3"),
    ("episodes", "4000"),
    ("seed", "0"),
    ("output_dir", "runs"),
    ("eval_episodes", "100"),
    ("checkpoint_every", "500"),
    ("morl_weights", "(unset)"),
    ("sweep.episodes", "800"),
    ("sweep.workers", "0"),
    ("agent.gamma", "0.99"),
    ("agent.tau", "0.005"),
    ("agent.batch_size", "64"),
    ("agent.actor_lr", "0.0001"),
    ("agent.critic_lr", "0.001"),
    ("agent.hidden", "64,64"),
    ("agent.epsilon_start", "1.0"),
    ("agent.epsilon_end", "0.05"),
    ("agent.epsilon_decay_fraction", "0.2"),
    ("agent.sigma", "0.1"),
    ("agent.policy_noise", "0.2"),
    ("agent.noise_clip", "0.5"),
    ("agent.policy_delay", "2"),
    ("agent.buffer_capacity", "100000"),
    ("agent.warmup_steps", "1000"),
    ("stage.arena_half_extent", "(preset)"),
    ("stage.wall_thickness", "(preset)"),
    ("stage.robot_radius", "(preset)"),
    ("stage.goal_radius", "(preset)"),
    ("stage.time_limit", "(preset)"),
    ("stage.dt", "(preset)"),
    ("stage.lidar_beams", "(preset)"),
    ("stage.lidar_max_range", "(preset)"),
    ("stage.obstacle", "(preset)"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub stage: StageSpec,
    pub algo: AgentKind,
    pub episodes: usize,
    pub seed: u64,
    pub agent: AgentConfig,
    pub morl_weights: Option<Weights>,
    pub output_dir: PathBuf,
    pub eval_episodes: usize,
    /// Periodic checkpoint interval in episodes; 0 keeps only the final one.
    pub checkpoint_every: usize,
    /// Episodes per cell in a weight sweep.
    pub sweep_episodes: usize,
    /// Worker threads for sweeps; 0 uses one per core.
    pub sweep_workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            stage: stage_build("stageA").expect("preset exists"),
            algo: AgentKind::Td3,
            episodes: 4000,
            seed: 0,
            agent: AgentConfig::default(),
            morl_weights: None,
            output_dir: PathBuf::from("runs"),
            eval_episodes: 100,
            checkpoint_every: 500,
            sweep_episodes: 800,
            sweep_workers: 0,
        }
    }
}

impl RunConfig {
    /// Agent hyperparameters with the run's MORL weights attached.
    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            morl_weights: self.morl_weights,
            ..self.agent.clone()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.episodes < 1 {
            return Err(HarnessError::Invalid("episodes must be >= 1".into()));
        }
        if self.algo == AgentKind::MoTd3 && self.morl_weights.is_none() {
            return Err(HarnessError::Invalid("algo=motd3 requires morl_weights".into()));
        }
        self.stage.validate()?;
        self.agent.validate()?;
        Ok(())
    }

    /// Serializes back to the text format; parsing the result yields an
    /// equal config.
    pub fn to_config_string(&self) -> String {
        let a = &self.agent;
        let s = &self.stage;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("stage", s.name.clone());
        kv("algo", self.algo.to_string());
        kv("episodes", self.episodes.to_string());
        kv("seed", self.seed.to_string());
        kv("output_dir", self.output_dir.display().to_string());
        kv("eval_episodes", self.eval_episodes.to_string());
        kv("checkpoint_every", self.checkpoint_every.to_string());
        if let Some(w) = self.morl_weights {
            kv("morl_weights", join(&w.as_array()));
        }
        kv("sweep.episodes", self.sweep_episodes.to_string());
        kv("sweep.workers", self.sweep_workers.to_string());
        kv("agent.gamma", a.gamma.to_string());
        kv("agent.tau", a.tau.to_string());
        kv("agent.batch_size", a.batch_size.to_string());
        kv("agent.actor_lr", a.actor_lr.to_string());
        kv("agent.critic_lr", a.critic_lr.to_string());
        kv("agent.hidden", join(&a.hidden));
        kv("agent.epsilon_start", a.epsilon_start.to_string());
        kv("agent.epsilon_end", a.epsilon_end.to_string());
        kv("agent.epsilon_decay_fraction", a.epsilon_decay_fraction.to_string());
        kv("agent.sigma", a.sigma.to_string());
        kv("agent.policy_noise", a.policy_noise.to_string());
        kv("agent.noise_clip", a.noise_clip.to_string());
        kv("agent.policy_delay", a.policy_delay.to_string());
        kv("agent.buffer_capacity", a.buffer_capacity.to_string());
        kv("agent.warmup_steps", a.warmup_steps.to_string());
        kv("stage.arena_half_extent", s.arena_half_extent.to_string());
        kv("stage.wall_thickness", s.wall_thickness.to_string());
        kv("stage.robot_radius", s.robot_radius.to_string());
        kv("stage.goal_radius", s.goal_radius.to_string());
        kv("stage.time_limit", s.time_limit.to_string());
        kv("stage.dt", s.dt.to_string());
        kv("stage.lidar_beams", s.lidar.beams.to_string());
        kv("stage.lidar_max_range", s.lidar.max_range.to_string());
        for o in &s.obstacles {
            let v = match o.motion {
                crate::sim::Motion::Static => format!("static {} {} {}", o.center.0, o.center.1, o.radius),
                crate::sim::Motion::Oscillating {
                    axis,
                    amplitude,
                    period,
                    phase,
                } => format!(
                    "osc {} {} {} {} {} {amplitude} {period} {phase}",
                    o.center.0, o.center.1, o.radius, axis.0, axis.1
                ),
            };
            kv("stage.obstacle", v);
        }
        out
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

pub fn parse_config(path: &Path) -> Result<RunConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_config_str(&text, path)
}

/// Parses config text; `origin` is only used in error messages.
pub fn parse_config_str(text: &str, origin: &Path) -> Result<RunConfig, HarnessError> {
    let mut cfg = RunConfig::default();
    let mut stage_name = "stageA".to_string();
    let mut stage_edits: Vec<(usize, String, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let perr = |message: String| HarnessError::Parse {
            path: origin.to_path_buf(),
            line: line_no,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| perr(format!("expected key=value, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        macro_rules! num {
            ($v:expr) => {
                parse_value($v, key, line_no, origin)
            };
        }
        let a = &mut cfg.agent;
        match key {
            "stage" => stage_name = value.to_string(),
            "algo" => cfg.algo = AgentKind::from_str(value).map_err(perr)?,
            "episodes" => cfg.episodes = num!(value)?,
            "seed" => cfg.seed = num!(value)?,
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            "eval_episodes" => cfg.eval_episodes = num!(value)?,
            "checkpoint_every" => cfg.checkpoint_every = num!(value)?,
            "morl_weights" => {
                let w: Vec<f64> = parse_list(value, key, line_no, origin)?;
                cfg.morl_weights = Some(Weights::try_from(w.as_slice()).map_err(|e| perr(e.to_string()))?);
            }
            "sweep.episodes" => cfg.sweep_episodes = num!(value)?,
            "sweep.workers" => cfg.sweep_workers = num!(value)?,
            "agent.gamma" => a.gamma = checked(num!(value)?, |g| g > 0.0 && g < 1.0, "gamma must lie in (0, 1)", &perr)?,
            "agent.tau" => a.tau = checked(num!(value)?, |t| (0.0..=1.0).contains(&t), "tau must lie in [0, 1]", &perr)?,
            "agent.batch_size" => a.batch_size = num!(value)?,
            "agent.actor_lr" => a.actor_lr = num!(value)?,
            "agent.critic_lr" => a.critic_lr = num!(value)?,
            "agent.hidden" => {
                a.hidden = if value.is_empty() {
                    Vec::new()
                } else {
                    parse_list(value, key, line_no, origin)?
                }
            }
            "agent.epsilon_start" => a.epsilon_start = num!(value)?,
            "agent.epsilon_end" => a.epsilon_end = num!(value)?,
            "agent.epsilon_decay_fraction" => a.epsilon_decay_fraction = num!(value)?,
            "agent.sigma" => a.sigma = num!(value)?,
            "agent.policy_noise" => a.policy_noise = num!(value)?,
            "agent.noise_clip" => a.noise_clip = num!(value)?,
            "agent.policy_delay" => a.policy_delay = num!(value)?,
            "agent.buffer_capacity" => a.buffer_capacity = num!(value)?,
            "agent.warmup_steps" => a.warmup_steps = num!(value)?,
            k if k.starts_with("stage.") && CONFIG_KEYS.iter().any(|(name, _)| *name == k) => {
                stage_edits.push((line_no, k.to_string(), value.to_string()))
            }
            _ => {
                return Err(HarnessError::UnknownKey {
                    path: origin.to_path_buf(),
                    line: line_no,
                    key: key.to_string(),
                })
            }
        }
    }

    let mut stage = stage_build(&stage_name)?;
    let mut replaced_obstacles = false;
    for (line, key, value) in stage_edits {
        macro_rules! num {
            ($v:expr) => {
                parse_value($v, &key, line, origin)
            };
        }
        match key.as_str() {
            "stage.arena_half_extent" => stage.arena_half_extent = num!(&value)?,
            "stage.wall_thickness" => stage.wall_thickness = num!(&value)?,
            "stage.robot_radius" => stage.robot_radius = num!(&value)?,
            "stage.goal_radius" => stage.goal_radius = num!(&value)?,
            "stage.time_limit" => stage.time_limit = num!(&value)?,
            "stage.dt" => stage.dt = num!(&value)?,
            "stage.lidar_beams" => stage.lidar.beams = num!(&value)?,
            "stage.lidar_max_range" => stage.lidar.max_range = num!(&value)?,
            "stage.obstacle" => {
                if !replaced_obstacles {
                    stage.obstacles.clear();
                    replaced_obstacles = true;
                }
                stage.obstacles.push(parse_obstacle(&value, line, origin)?);
            }
            _ => unreachable!("filtered above"),
        }
    }
    cfg.stage = stage;
    cfg.validate()?;
    Ok(cfg)
}

fn checked(
    v: f64,
    ok: impl Fn(f64) -> bool,
    msg: &str,
    perr: &impl Fn(String) -> HarnessError,
) -> Result<f64, HarnessError> {
    if ok(v) {
        Ok(v)
    } else {
        Err(perr(format!("{msg}, got {v}")))
    }
}

fn parse_value<T: FromStr>(v: &str, key: &str, line: usize, origin: &Path) -> Result<T, HarnessError> {
    v.parse().map_err(|_| HarnessError::Parse {
        path: origin.to_path_buf(),
        line,
        message: format!("cannot parse `{v}` for `{key}` as {}", std::any::type_name::<T>()),
    })
}

fn parse_list<T: FromStr>(v: &str, key: &str, line: usize, origin: &Path) -> Result<Vec<T>, HarnessError> {
    v.split(',').map(|s| parse_value(s.trim(), key, line, origin)).collect()
}

fn parse_obstacle(v: &str, line: usize, origin: &Path) -> Result<Obstacle, HarnessError> {
    let mut parts = v.split_whitespace();
    let kind = parts.next().unwrap_or("");
    let nums: Vec<f64> = parts
        .map(|p| parse_value(p, "stage.obstacle", line, origin))
        .collect::<Result<_, _>>()?;
    let perr = |message: String| HarnessError::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    match (kind, nums.as_slice()) {
        ("static", &[x, y, r]) => Ok(Obstacle::fixed(x, y, r)),
        ("osc", &[x, y, r, ax, ay, amp, period, phase]) => {
            Ok(Obstacle::oscillating(x, y, r, (ax, ay), amp, period, phase))
        }
        ("static", _) => Err(perr("static obstacle needs: X Y R".into())),
        ("osc", _) => Err(perr("osc obstacle needs: X Y R AXIS_X AXIS_Y AMPLITUDE PERIOD PHASE".into())),
        _ => Err(perr(format!("unknown obstacle kind `{kind}` (expected static or osc)"))),
    }
}
