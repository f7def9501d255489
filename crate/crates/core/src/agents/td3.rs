use rand_chacha::ChaCha8Rng;

use super::ddpg::{actor_step, critic_step, noisy_action};
use super::{agent_rng, derive_seed, gaussian, AgentConfig, AgentError, Batch, RewardSource, ACTION_DIM};
use crate::nn::{soft_update, AdamConfig, AdamState, Matrix, Mlp};
use crate::replay::{RewardKind, ReplayBuffer, ReplayError};
use crate::reward::Weights;

/// Twin-critic bootstrap targets along with the single-critic variants.
#[derive(Debug, Clone, PartialEq)]
pub struct TdTargets {
    pub targets: Vec<f64>,
    pub with_critic1: Vec<f64>,
    pub with_critic2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Td3 {
    pub config: AgentConfig,
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub critic1_target: Mlp,
    pub critic2_target: Mlp,
    pub actor_opt: AdamState,
    pub critic1_opt: AdamState,
    pub critic2_opt: AdamState,
    update_counter: u64,
    pub(crate) rng: ChaCha8Rng,
}

impl Td3 {
    pub fn new(config: AgentConfig, state_dim: usize, seed: u64) -> Result<Self, AgentError> {
        config.validate()?;
        let actor = config.actor_net(state_dim, derive_seed(seed, 1))?;
        let critic1 = config.critic_net(state_dim + ACTION_DIM, 1, derive_seed(seed, 2))?;
        let critic2 = config.critic_net(state_dim + ACTION_DIM, 1, derive_seed(seed, 3))?;
        Ok(Self {
            actor_opt: AdamState::new(&actor, AdamConfig::with_lr(config.actor_lr)),
            critic1_opt: AdamState::new(&critic1, AdamConfig::with_lr(config.critic_lr)),
            critic2_opt: AdamState::new(&critic2, AdamConfig::with_lr(config.critic_lr)),
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            update_counter: 0,
            rng: agent_rng(seed),
            config,
        })
    }

    pub fn update_counter(&self) -> u64 {
        self.update_counter
    }

    pub fn policy(&self, state: &[f64]) -> Result<[f64; 2], AgentError> {
        let out = self.actor.predict_one(state)?;
        Ok([out[0].clamp(-1.0, 1.0), out[1].clamp(-1.0, 1.0)])
    }

    pub fn act_normalized(&mut self, state: &[f64], sigma: f64) -> Result<[f64; 2], AgentError> {
        noisy_action(&self.actor, state, sigma, &mut self.rng)
    }

    /// Smoothed target action: `clamp(actor_target(s′) + clamp(ε, ±c), ±1)`
    /// with `ε ~ N(0, policy_noise)`.
    pub fn target_actions(&mut self, next_states: &Matrix) -> Result<Matrix, AgentError> {
        let mut a = self.actor_target.predict(next_states)?;
        let (sd, clip) = (self.config.policy_noise, self.config.noise_clip);
        for v in a.as_mut_slice() {
            let eps = if sd > 0.0 { gaussian(&mut self.rng, sd) } else { 0.0 };
            *v = (*v + eps.clamp(-clip, clip)).clamp(-1.0, 1.0);
        }
        Ok(a)
    }

    /// Clipped double-Q targets `r + gamma·(1 − done)·min(Q1′, Q2′)`.
    pub fn td_targets(&mut self, batch: &Batch) -> Result<TdTargets, AgentError> {
        let a_next = self.target_actions(&batch.next_states)?;
        let inputs = batch.next_states.hcat(&a_next)?;
        let q1 = self.critic1_target.predict(&inputs)?;
        let q2 = self.critic2_target.predict(&inputs)?;
        let gamma = self.config.gamma;
        let mut out = TdTargets {
            targets: Vec::with_capacity(batch.len()),
            with_critic1: Vec::with_capacity(batch.len()),
            with_critic2: Vec::with_capacity(batch.len()),
        };
        for i in 0..batch.len() {
            let r = batch.rewards[i];
            if batch.dones[i] {
                out.targets.push(r);
                out.with_critic1.push(r);
                out.with_critic2.push(r);
            } else {
                let (a, b) = (q1[(i, 0)], q2[(i, 0)]);
                out.targets.push(r + gamma * a.min(b));
                out.with_critic1.push(r + gamma * a);
                out.with_critic2.push(r + gamma * b);
            }
        }
        Ok(out)
    }

    pub fn update(&mut self, buffer: &ReplayBuffer) -> Result<(f64, Option<f64>), AgentError> {
        self.update_from(buffer, RewardSource::Scalar)
    }

    pub(crate) fn update_from(
        &mut self,
        buffer: &ReplayBuffer,
        source: RewardSource,
    ) -> Result<(f64, Option<f64>), AgentError> {
        let sample = buffer.sample(self.config.batch_size, &mut self.rng)?;
        let batch = Batch::from_transitions(&sample, source)?;
        Ok(self.update_on_batch(&batch)?.0)
    }

    /// Both critics regress to the shared targets; every `policy_delay`-th
    /// call also steps the actor and Polyak-updates all three targets.
    /// Returns pre-step losses (mean of the two critics) and the targets used.
    pub fn update_on_batch(&mut self, batch: &Batch) -> Result<((f64, Option<f64>), TdTargets), AgentError> {
        let targets = self.td_targets(batch)?;
        let critic_in = batch.states.hcat(&batch.actions)?;
        let l1 = critic_step(&mut self.critic1, &mut self.critic1_opt, &critic_in, &targets.targets)?;
        let l2 = critic_step(&mut self.critic2, &mut self.critic2_opt, &critic_in, &targets.targets)?;
        self.update_counter += 1;
        let actor_loss = if self.update_counter % self.config.policy_delay == 0 {
            let loss = actor_step(&mut self.actor, &mut self.actor_opt, &self.critic1, &batch.states)?;
            let tau = self.config.tau;
            soft_update(&mut self.actor_target, &self.actor, tau)?;
            soft_update(&mut self.critic1_target, &self.critic1, tau)?;
            soft_update(&mut self.critic2_target, &self.critic2, tau)?;
            Some(loss)
        } else {
            None
        };
        Ok(((0.5 * (l1 + l2), actor_loss), targets))
    }
}

/// TD3 update on a vector-reward buffer, scalarizing each sampled reward
/// with `weights` at update time.
pub fn motd3_update(
    agent: &mut Td3,
    buffer: &ReplayBuffer,
    weights: &Weights,
) -> Result<(f64, Option<f64>), AgentError> {
    if let Some(RewardKind::Scalar) = buffer.reward_kind() {
        return Err(ReplayError::TagMismatch {
            buffer: RewardKind::Scalar,
            got: RewardKind::Vector,
        }
        .into());
    }
    agent.update_from(buffer, RewardSource::Scalarized(*weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Dense};
    use crate::replay::{Reward, StoredAction, Transition};
    use crate::reward::{EpisodeStatus, RewardVector};
    use rand::{Rng, SeedableRng};

    fn cfg() -> AgentConfig {
        AgentConfig {
            hidden: vec![16],
            batch_size: 8,
            ..Default::default()
        }
    }

    fn constant_net(input: usize, value: f64) -> Mlp {
        Mlp::from_layers(vec![Dense::new(Matrix::zeros(1, input), vec![value], Activation::Identity).unwrap()]).unwrap()
    }

    fn vector_buffer(n: usize, seed: u64) -> ReplayBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = ReplayBuffer::new(n).unwrap();
        for i in 0..n {
            b.push(Transition {
                state: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                action: StoredAction::Continuous(vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]),
                reward: Reward::Vector(RewardVector::new(
                    rng.random_range(-3.0..3.0),
                    if i % 5 == 0 { -2020.0 } else { 0.0 },
                    rng.random_range(-9.0..0.0),
                    -1.0,
                )),
                next_state: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                done: i % 5 == 0,
                status: if i % 5 == 0 { EpisodeStatus::CollisionWall } else { EpisodeStatus::Ongoing },
            })
            .unwrap();
        }
        b
    }

    fn one_batch(b: &ReplayBuffer, source: RewardSource) -> Batch {
        let all: Vec<&Transition> = b.iter_fifo().collect();
        Batch::from_transitions(&all, source).unwrap()
    }

    #[test]
    fn twin_min_and_discount() {
        let mut a = Td3::new(cfg(), 3, 0).unwrap();
        a.config.policy_noise = 0.0;
        a.critic1_target = constant_net(5, 1.0);
        a.critic2_target = constant_net(5, 2.0);
        let mut buf = vector_buffer(1, 1);
        let mut t = buf.iter_fifo().next().unwrap().clone();
        t.reward = Reward::Scalar(0.0);
        t.done = false;
        buf = ReplayBuffer::new(1).unwrap();
        buf.push(t).unwrap();
        let b = one_batch(&buf, RewardSource::Scalar);
        let y = a.td_targets(&b).unwrap();
        assert!((y.targets[0] - 0.99).abs() < 1e-15);
    }

    #[test]
    fn terminal_targets_ignore_critics() {
        let mut a = Td3::new(cfg(), 3, 0).unwrap();
        let buf = vector_buffer(10, 2);
        let b = one_batch(&buf, RewardSource::Scalarized(Weights::UNIT));
        let y = a.td_targets(&b).unwrap();
        for i in 0..b.len() {
            if b.dones[i] {
                assert_eq!(y.targets[i], b.rewards[i]);
            }
        }
    }

    #[test]
    fn zero_noise_clip_removes_smoothing() {
        let mut a = Td3::new(cfg(), 3, 0).unwrap();
        a.config.policy_noise = 0.2;
        a.config.noise_clip = 0.0;
        let s = Matrix::from_rows(&[vec![0.1, 0.2, 0.3], vec![-0.5, 0.5, 0.0]]).unwrap();
        let smoothed = a.target_actions(&s).unwrap();
        let raw = a.actor_target.predict(&s).unwrap().map(|v| v.clamp(-1.0, 1.0));
        assert_eq!(smoothed, raw);
    }

    #[test]
    fn delayed_actor_updates() {
        for delay in [1u64, 2, 3] {
            let mut c = cfg();
            c.policy_delay = delay;
            let mut a = Td3::new(c, 3, 4).unwrap();
            let buf = vector_buffer(32, 3);
            let mut changes = 0;
            for call in 1..=12u64 {
                let before = a.actor.clone();
                let (_, actor_loss) = motd3_update(&mut a, &buf, &Weights::UNIT).unwrap();
                let changed = a.actor != before;
                assert_eq!(changed, call % delay == 0);
                assert_eq!(actor_loss.is_some(), changed);
                changes += changed as u64;
            }
            assert_eq!(changes, 12 / delay);
        }
    }

    #[test]
    fn min_dominance() {
        let mut a = Td3::new(cfg(), 3, 8).unwrap();
        let buf = vector_buffer(32, 9);
        let b = one_batch(&buf, RewardSource::Scalarized(Weights::UNIT));
        let y = a.td_targets(&b).unwrap();
        for i in 0..b.len() {
            assert!(y.targets[i] <= y.with_critic1[i]);
            assert!(y.targets[i] <= y.with_critic2[i]);
        }
    }

    #[test]
    fn time_basis_weights() {
        let mut a = Td3::new(cfg(), 3, 0).unwrap();
        let buf = vector_buffer(10, 5);
        let w = Weights::new([0.0, 0.0, 0.0, 1.0]).unwrap();
        let mut b = one_batch(&buf, RewardSource::Scalarized(w));
        b.dones.iter_mut().for_each(|d| *d = true);
        let y = a.td_targets(&b).unwrap();
        assert!(y.targets.iter().all(|v| *v == -1.0));
    }

    #[test]
    fn scalar_buffer_rejected_by_motd3() {
        let mut a = Td3::new(cfg(), 3, 0).unwrap();
        let mut buf = ReplayBuffer::new(16).unwrap();
        for t in vector_buffer(16, 1).iter_fifo() {
            let mut t = t.clone();
            t.reward = Reward::Scalar(0.0);
            buf.push(t).unwrap();
        }
        assert!(matches!(
            motd3_update(&mut a, &buf, &Weights::UNIT),
            Err(AgentError::Replay(ReplayError::TagMismatch { .. }))
        ));
    }
}
