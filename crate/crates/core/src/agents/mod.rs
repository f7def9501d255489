//! Off-policy learners: DQN over a discrete steering set, DDPG, TD3, and
//! multi-objective TD3 that scalarizes stored reward vectors at update time.

mod ddpg;
mod dqn;
mod td3;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::nn::{Activation, Checkpoint, Matrix, Mlp, NnError};
use crate::replay::{Reward, RewardKind, ReplayBuffer, ReplayError, StoredAction, Transition};
use crate::reward::{scalarize, RewardError, Weights};
use crate::sim::{Action, MAX_LINEAR};

pub use ddpg::Ddpg;
pub use dqn::{greedy_index, Dqn};
pub use td3::{motd3_update, Td3, TdTargets};

/// Dimension of the normalized continuous action.
pub const ACTION_DIM: usize = 2;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error("invalid agent config: {0}")]
    InvalidConfig(String),
    #[error("incompatible checkpoint: {0}")]
    IncompatibleCheckpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Dqn,
    Ddpg,
    Td3,
    MoTd3,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [AgentKind::Dqn, AgentKind::Ddpg, AgentKind::Td3, AgentKind::MoTd3];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Dqn => "dqn",
            AgentKind::Ddpg => "ddpg",
            AgentKind::Td3 => "td3",
            AgentKind::MoTd3 => "motd3",
        }
    }

    pub fn reward_kind(self) -> RewardKind {
        match self {
            AgentKind::MoTd3 => RewardKind::Vector,
            _ => RewardKind::Scalar,
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected dqn, ddpg, td3 or motd3)"))
    }
}

/// Fixed steering set for DQN: full forward speed, five turn rates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteActionSet {
    actions: Vec<Action>,
}

impl DiscreteActionSet {
    pub fn new(actions: Vec<Action>) -> Result<Self, AgentError> {
        if actions.is_empty() {
            return Err(AgentError::InvalidConfig("discrete action set is empty".into()));
        }
        Ok(Self { actions })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<Action> {
        self.actions.get(i).copied()
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }
}

impl Default for DiscreteActionSet {
    fn default() -> Self {
        Self {
            actions: [-1.5, -0.75, 0.0, 0.75, 1.5]
                .into_iter()
                .map(|w| Action::new(MAX_LINEAR, w))
                .collect(),
        }
    }
}

/// Hyperparameters shared by all learners.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub hidden: Vec<usize>,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the run's episodes over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
    /// Gaussian exploration noise in normalized action units.
    pub sigma: f64,
    pub policy_noise: f64,
    pub noise_clip: f64,
    pub policy_delay: u64,
    pub buffer_capacity: usize,
    /// Environment steps of uniformly random actions before learning starts.
    pub warmup_steps: u64,
    pub morl_weights: Option<Weights>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            batch_size: 64,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            hidden: vec![64, 64],
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.2,
            sigma: 0.1,
            policy_noise: 0.2,
            noise_clip: 0.5,
            policy_delay: 2,
            buffer_capacity: 100_000,
            warmup_steps: 1000,
            morl_weights: None,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: String| Err(AgentError::InvalidConfig(m));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad(format!("tau must lie in [0, 1], got {}", self.tau));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if !(self.actor_lr > 0.0) || !(self.critic_lr > 0.0) {
            return bad("learning rates must be > 0".into());
        }
        if self.hidden.iter().any(|h| *h == 0) {
            return bad("hidden layer widths must be >= 1".into());
        }
        for (name, v) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay_fraction) {
            return bad("epsilon_decay_fraction must lie in [0, 1]".into());
        }
        if !(self.sigma >= 0.0) || !(self.policy_noise >= 0.0) {
            return bad("noise scales must be >= 0".into());
        }
        if !(self.noise_clip >= 0.0) {
            return bad(format!("noise_clip must be >= 0, got {}", self.noise_clip));
        }
        if self.policy_delay < 1 {
            return bad("policy_delay must be >= 1".into());
        }
        if self.buffer_capacity < self.batch_size {
            return bad("buffer_capacity must be >= batch_size".into());
        }
        Ok(())
    }

    /// Linearly decayed epsilon for episode `episode` of `total`.
    pub fn epsilon_at(&self, episode: usize, total: usize) -> f64 {
        let horizon = self.epsilon_decay_fraction * total as f64;
        if horizon <= 0.0 {
            return self.epsilon_end;
        }
        let frac = episode as f64 / horizon;
        if frac >= 1.0 {
            return self.epsilon_end;
        }
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }

    fn layer_sizes(&self, input: usize, output: usize) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.hidden.len() + 2);
        s.push(input);
        s.extend(&self.hidden);
        s.push(output);
        s
    }

    fn activations(&self, output: Activation) -> Vec<Activation> {
        let mut a = vec![Activation::Relu; self.hidden.len()];
        a.push(output);
        a
    }

    pub(crate) fn critic_net(&self, input: usize, output: usize, seed: u64) -> Result<Mlp, NnError> {
        Mlp::new(&self.layer_sizes(input, output), &self.activations(Activation::Identity), seed)
    }

    pub(crate) fn actor_net(&self, input: usize, seed: u64) -> Result<Mlp, NnError> {
        Mlp::new(&self.layer_sizes(input, ACTION_DIM), &self.activations(Activation::Tanh), seed)
    }
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn agent_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xA11CE))
}

/// How per-transition rewards turn into regression scalars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardSource {
    Scalar,
    Scalarized(Weights),
}

impl RewardSource {
    fn extract(&self, r: &Reward) -> Result<f64, ReplayError> {
        match (self, r) {
            (RewardSource::Scalar, Reward::Scalar(x)) => Ok(*x),
            (RewardSource::Scalarized(w), Reward::Vector(v)) => Ok(scalarize(v, w)),
            (RewardSource::Scalar, Reward::Vector(_)) => Err(ReplayError::TagMismatch {
                buffer: RewardKind::Vector,
                got: RewardKind::Scalar,
            }),
            (RewardSource::Scalarized(_), Reward::Scalar(_)) => Err(ReplayError::TagMismatch {
                buffer: RewardKind::Scalar,
                got: RewardKind::Vector,
            }),
        }
    }
}

/// Minibatch in matrix form.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Matrix,
    pub next_states: Matrix,
    /// Normalized continuous actions (empty columns for discrete batches).
    pub actions: Matrix,
    pub action_indices: Vec<usize>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn from_transitions(ts: &[&Transition], source: RewardSource) -> Result<Self, AgentError> {
        let states = Matrix::from_rows(&ts.iter().map(|t| t.state.as_slice()).collect::<Vec<_>>())?;
        let next_states = Matrix::from_rows(&ts.iter().map(|t| t.next_state.as_slice()).collect::<Vec<_>>())?;
        let mut cont: Vec<&[f64]> = Vec::new();
        let mut idx = Vec::new();
        for t in ts {
            match &t.action {
                StoredAction::Continuous(a) => cont.push(a),
                StoredAction::Discrete(i) => idx.push(*i),
            }
        }
        if !cont.is_empty() && !idx.is_empty() {
            return Err(AgentError::InvalidConfig("batch mixes discrete and continuous actions".into()));
        }
        let actions = if cont.is_empty() {
            Matrix::zeros(ts.len(), 0)
        } else {
            Matrix::from_rows(&cont)?
        };
        let rewards = ts
            .iter()
            .map(|t| source.extract(&t.reward))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            states,
            next_states,
            actions,
            action_indices: idx,
            rewards,
            dones: ts.iter().map(|t| t.done).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Losses reported by one update call (values before the optimizer step).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: Option<f64>,
}

/// Mean squared error and its gradient with respect to `pred`.
pub(crate) fn mse_and_grad(pred: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, y)| {
            let d = p - y;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    (loss / n, grad)
}

/// Gaussian sample with standard deviation `sigma` (0 gives 0).
pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    let z: f64 = rng.sample(rand_distr::StandardNormal);
    sigma * z
}

/// Any of the four learners behind one interface.
#[derive(Debug, Clone)]
pub enum Agent {
    Dqn(Dqn),
    Ddpg(Ddpg),
    Td3(Td3),
    MoTd3 { inner: Td3, weights: Weights },
}

impl Agent {
    pub fn new(kind: AgentKind, config: &AgentConfig, state_dim: usize, seed: u64) -> Result<Self, AgentError> {
        config.validate()?;
        Ok(match kind {
            AgentKind::Dqn => Agent::Dqn(Dqn::new(config.clone(), state_dim, DiscreteActionSet::default(), seed)?),
            AgentKind::Ddpg => Agent::Ddpg(Ddpg::new(config.clone(), state_dim, seed)?),
            AgentKind::Td3 => Agent::Td3(Td3::new(config.clone(), state_dim, seed)?),
            AgentKind::MoTd3 => {
                let weights = config.morl_weights.ok_or_else(|| {
                    AgentError::InvalidConfig("motd3 requires morl_weights".into())
                })?;
                Agent::MoTd3 {
                    inner: Td3::new(config.clone(), state_dim, seed)?,
                    weights,
                }
            }
        })
    }

    pub fn kind(&self) -> AgentKind {
        match self {
            Agent::Dqn(_) => AgentKind::Dqn,
            Agent::Ddpg(_) => AgentKind::Ddpg,
            Agent::Td3(_) => AgentKind::Td3,
            Agent::MoTd3 { .. } => AgentKind::MoTd3,
        }
    }

    pub fn config(&self) -> &AgentConfig {
        match self {
            Agent::Dqn(a) => &a.config,
            Agent::Ddpg(a) => &a.config,
            Agent::Td3(a) | Agent::MoTd3 { inner: a, .. } => &a.config,
        }
    }

    /// Uniformly random exploratory action drawn from the agent's stream.
    pub fn random_action(&mut self) -> (Action, StoredAction) {
        match self {
            Agent::Dqn(a) => {
                let i = a.rng.random_range(0..a.actions.len());
                (a.actions.get(i).expect("in range"), StoredAction::Discrete(i))
            }
            Agent::Ddpg(Ddpg { rng, .. }) | Agent::Td3(Td3 { rng, .. }) | Agent::MoTd3 { inner: Td3 { rng, .. }, .. } => {
                let u = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
                (Action::from_normalized(u), StoredAction::Continuous(u.to_vec()))
            }
        }
    }

    /// Exploratory action: epsilon-greedy for DQN, Gaussian noise otherwise.
    /// `explore` is epsilon or sigma respectively.
    pub fn act(&mut self, state: &[f64], explore: f64) -> Result<(Action, StoredAction), AgentError> {
        match self {
            Agent::Dqn(a) => {
                let i = a.select_action(state, explore)?;
                Ok((a.actions.get(i).expect("in range"), StoredAction::Discrete(i)))
            }
            Agent::Ddpg(a) => {
                let u = a.act_normalized(state, explore)?;
                Ok((Action::from_normalized(u), StoredAction::Continuous(u.to_vec())))
            }
            Agent::Td3(a) | Agent::MoTd3 { inner: a, .. } => {
                let u = a.act_normalized(state, explore)?;
                Ok((Action::from_normalized(u), StoredAction::Continuous(u.to_vec())))
            }
        }
    }

    /// Noise-free action; never touches the random stream.
    pub fn greedy(&self, state: &[f64]) -> Result<Action, AgentError> {
        match self {
            Agent::Dqn(a) => Ok(a.actions.get(a.greedy_action(state)?).expect("in range")),
            Agent::Ddpg(a) => Ok(Action::from_normalized(a.policy(state)?)),
            Agent::Td3(a) | Agent::MoTd3 { inner: a, .. } => Ok(Action::from_normalized(a.policy(state)?)),
        }
    }

    pub fn update(&mut self, buffer: &ReplayBuffer) -> Result<UpdateStats, AgentError> {
        match self {
            Agent::Dqn(a) => Ok(UpdateStats {
                critic_loss: a.update(buffer)?,
                actor_loss: None,
            }),
            Agent::Ddpg(a) => {
                let (c, act) = a.update(buffer)?;
                Ok(UpdateStats {
                    critic_loss: c,
                    actor_loss: Some(act),
                })
            }
            Agent::Td3(a) => {
                let (c, act) = a.update(buffer)?;
                Ok(UpdateStats {
                    critic_loss: c,
                    actor_loss: act,
                })
            }
            Agent::MoTd3 { inner, weights } => {
                let (c, act) = motd3_update(inner, buffer, weights)?;
                Ok(UpdateStats {
                    critic_loss: c,
                    actor_loss: act,
                })
            }
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new();
        ck.set_meta("agent.kind", self.kind().as_str());
        match self {
            Agent::Dqn(a) => {
                ck.set_meta("agent.state_dim", a.q.input_dim().to_string());
                ck.insert_mlp("q", &a.q);
                ck.insert_mlp("q_target", &a.q_target);
            }
            Agent::Ddpg(a) => {
                ck.set_meta("agent.state_dim", a.actor.input_dim().to_string());
                ck.insert_mlp("actor", &a.actor);
                ck.insert_mlp("actor_target", &a.actor_target);
                ck.insert_mlp("critic", &a.critic);
                ck.insert_mlp("critic_target", &a.critic_target);
            }
            Agent::Td3(a) | Agent::MoTd3 { inner: a, .. } => {
                ck.set_meta("agent.state_dim", a.actor.input_dim().to_string());
                ck.set_meta("agent.update_counter", a.update_counter().to_string());
                ck.insert_mlp("actor", &a.actor);
                ck.insert_mlp("actor_target", &a.actor_target);
                ck.insert_mlp("critic1", &a.critic1);
                ck.insert_mlp("critic2", &a.critic2);
                ck.insert_mlp("critic1_target", &a.critic1_target);
                ck.insert_mlp("critic2_target", &a.critic2_target);
            }
        }
        if let Agent::MoTd3 { weights, .. } = self {
            let w = weights.as_array().map(|x| x.to_string());
            ck.set_meta("agent.morl_weights", w.join(","));
        }
        ck
    }

    /// Rebuilds an agent of `expected` kind; optimizer moments start fresh.
    pub fn from_checkpoint(
        ck: &Checkpoint,
        expected: AgentKind,
        config: &AgentConfig,
        seed: u64,
    ) -> Result<Self, AgentError> {
        let kind: AgentKind = ck
            .meta("agent.kind")?
            .parse()
            .map_err(AgentError::IncompatibleCheckpoint)?;
        if kind != expected {
            return Err(AgentError::IncompatibleCheckpoint(format!(
                "checkpoint holds a {kind} agent, config expects {expected}"
            )));
        }
        let state_dim: usize = ck
            .meta("agent.state_dim")?
            .parse()
            .map_err(|_| AgentError::IncompatibleCheckpoint("bad agent.state_dim".into()))?;
        let mut config = config.clone();
        if kind == AgentKind::MoTd3 {
            let w: Vec<f64> = ck
                .meta("agent.morl_weights")?
                .split(',')
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| AgentError::IncompatibleCheckpoint("bad agent.morl_weights".into()))?;
            config.morl_weights = Some(Weights::try_from(w.as_slice())?);
        }
        let mut agent = Agent::new(kind, &config, state_dim, seed)?;
        let load = |slot: &mut Mlp, name: &str| -> Result<(), AgentError> {
            let net = ck.extract_mlp(name)?;
            if !net.congruent(slot) {
                return Err(AgentError::IncompatibleCheckpoint(format!(
                    "network `{name}` does not match the configured architecture"
                )));
            }
            *slot = net;
            Ok(())
        };
        match &mut agent {
            Agent::Dqn(a) => {
                load(&mut a.q, "q")?;
                load(&mut a.q_target, "q_target")?;
            }
            Agent::Ddpg(a) => {
                load(&mut a.actor, "actor")?;
                load(&mut a.actor_target, "actor_target")?;
                load(&mut a.critic, "critic")?;
                load(&mut a.critic_target, "critic_target")?;
            }
            Agent::Td3(a) | Agent::MoTd3 { inner: a, .. } => {
                load(&mut a.actor, "actor")?;
                load(&mut a.actor_target, "actor_target")?;
                load(&mut a.critic1, "critic1")?;
                load(&mut a.critic2, "critic2")?;
                load(&mut a.critic1_target, "critic1_target")?;
                load(&mut a.critic2_target, "critic2_target")?;
            }
        }
        Ok(agent)
    }
}
