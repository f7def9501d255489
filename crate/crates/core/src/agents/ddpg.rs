use rand_chacha::ChaCha8Rng;

use super::{agent_rng, derive_seed, gaussian, mse_and_grad, AgentConfig, AgentError, Batch, RewardSource, ACTION_DIM};
use crate::nn::{soft_update, AdamConfig, AdamState, Matrix, Mlp};
use crate::replay::ReplayBuffer;

/// Regresses `critic(s, a)` toward `targets` with one Adam step; returns the
/// pre-step MSE.
pub(crate) fn critic_step(
    critic: &mut Mlp,
    opt: &mut AdamState,
    inputs: &Matrix,
    targets: &[f64],
) -> Result<f64, AgentError> {
    let (q, cache) = critic.forward(inputs)?;
    let (loss, g) = mse_and_grad(q.as_slice(), targets);
    let (grads, _) = critic.backward(&cache, &Matrix::from_vec(q.rows(), 1, g)?)?;
    opt.step(critic, &grads)?;
    Ok(loss)
}

/// Gradient of `−mean critic(s, actor(s))` with respect to the actor's
/// parameters, together with the loss value. The critic is not modified.
pub(crate) fn actor_loss_and_grads(
    actor: &Mlp,
    critic: &Mlp,
    states: &Matrix,
) -> Result<(f64, crate::nn::Gradients), AgentError> {
    let (actions, actor_cache) = actor.forward(states)?;
    let critic_in = states.hcat(&actions)?;
    let (q, critic_cache) = critic.forward(&critic_in)?;
    let n = q.rows() as f64;
    let loss = -q.as_slice().iter().sum::<f64>() / n;
    let dq = Matrix::from_vec(q.rows(), 1, vec![-1.0 / n; q.rows()])?;
    let d_in = critic.input_gradient(&critic_cache, &dq)?;
    let d_actions = d_in.columns(states.cols(), states.cols() + ACTION_DIM);
    let (grads, _) = actor.backward(&actor_cache, &d_actions)?;
    Ok((loss, grads))
}

pub(crate) fn actor_step(
    actor: &mut Mlp,
    opt: &mut AdamState,
    critic: &Mlp,
    states: &Matrix,
) -> Result<f64, AgentError> {
    let (loss, grads) = actor_loss_and_grads(actor, critic, states)?;
    opt.step(actor, &grads)?;
    Ok(loss)
}

/// Deterministic policy output plus clamped Gaussian noise, normalized units.
pub(crate) fn noisy_action(actor: &Mlp, state: &[f64], sigma: f64, rng: &mut ChaCha8Rng) -> Result<[f64; 2], AgentError> {
    let out = actor.predict_one(state)?;
    let mut u = [0.0; ACTION_DIM];
    for (k, slot) in u.iter_mut().enumerate() {
        let noise = if sigma > 0.0 { gaussian(rng, sigma) } else { 0.0 };
        *slot = (out[k] + noise).clamp(-1.0, 1.0);
    }
    Ok(u)
}

#[derive(Debug, Clone)]
pub struct Ddpg {
    pub config: AgentConfig,
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub critic: Mlp,
    pub critic_target: Mlp,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
    pub(crate) rng: ChaCha8Rng,
}

impl Ddpg {
    pub fn new(config: AgentConfig, state_dim: usize, seed: u64) -> Result<Self, AgentError> {
        config.validate()?;
        let actor = config.actor_net(state_dim, derive_seed(seed, 1))?;
        let critic = config.critic_net(state_dim + ACTION_DIM, 1, derive_seed(seed, 2))?;
        Ok(Self {
            actor_opt: AdamState::new(&actor, AdamConfig::with_lr(config.actor_lr)),
            critic_opt: AdamState::new(&critic, AdamConfig::with_lr(config.critic_lr)),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            rng: agent_rng(seed),
            config,
        })
    }

    /// Noise-free normalized action.
    pub fn policy(&self, state: &[f64]) -> Result<[f64; 2], AgentError> {
        let out = self.actor.predict_one(state)?;
        Ok([out[0].clamp(-1.0, 1.0), out[1].clamp(-1.0, 1.0)])
    }

    pub fn act_normalized(&mut self, state: &[f64], sigma: f64) -> Result<[f64; 2], AgentError> {
        noisy_action(&self.actor, state, sigma, &mut self.rng)
    }

    /// `y = r + gamma·(1 − done)·critic_target(s′, actor_target(s′))`.
    pub fn td_targets(&self, batch: &Batch) -> Result<Vec<f64>, AgentError> {
        let a_next = self.actor_target.predict(&batch.next_states)?;
        let q_next = self.critic_target.predict(&batch.next_states.hcat(&a_next)?)?;
        Ok((0..batch.len())
            .map(|i| {
                if batch.dones[i] {
                    batch.rewards[i]
                } else {
                    batch.rewards[i] + self.config.gamma * q_next[(i, 0)]
                }
            })
            .collect())
    }

    pub fn update(&mut self, buffer: &ReplayBuffer) -> Result<(f64, f64), AgentError> {
        let sample = buffer.sample(self.config.batch_size, &mut self.rng)?;
        let batch = Batch::from_transitions(&sample, RewardSource::Scalar)?;
        self.update_on_batch(&batch)
    }

    /// Critic regression, actor ascent on the critic, then Polyak updates of
    /// both targets. Returns pre-step (critic_loss, actor_loss).
    pub fn update_on_batch(&mut self, batch: &Batch) -> Result<(f64, f64), AgentError> {
        let targets = self.td_targets(batch)?;
        let critic_in = batch.states.hcat(&batch.actions)?;
        let critic_loss = critic_step(&mut self.critic, &mut self.critic_opt, &critic_in, &targets)?;
        let actor_loss = actor_step(&mut self.actor, &mut self.actor_opt, &self.critic, &batch.states)?;
        soft_update(&mut self.critic_target, &self.critic, self.config.tau)?;
        soft_update(&mut self.actor_target, &self.actor, self.config.tau)?;
        Ok((critic_loss, actor_loss))
    }
}
