use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{agent_rng, derive_seed, AgentConfig, AgentError, Batch, DiscreteActionSet, RewardSource};
use crate::nn::{soft_update, AdamConfig, AdamState, Matrix, Mlp};
use crate::replay::ReplayBuffer;

/// Index of the largest value; ties go to the lowest index.
pub fn greedy_index(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in q.iter().enumerate().skip(1) {
        if *v > q[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct Dqn {
    pub config: AgentConfig,
    pub actions: DiscreteActionSet,
    pub q: Mlp,
    pub q_target: Mlp,
    pub optimizer: AdamState,
    pub(crate) rng: ChaCha8Rng,
}

impl Dqn {
    pub fn new(config: AgentConfig, state_dim: usize, actions: DiscreteActionSet, seed: u64) -> Result<Self, AgentError> {
        config.validate()?;
        let q = config.critic_net(state_dim, actions.len(), derive_seed(seed, 1))?;
        let optimizer = AdamState::new(&q, AdamConfig::with_lr(config.critic_lr));
        Ok(Self {
            q_target: q.clone(),
            q,
            optimizer,
            rng: agent_rng(seed),
            actions,
            config,
        })
    }

    pub fn greedy_action(&self, state: &[f64]) -> Result<usize, AgentError> {
        Ok(greedy_index(&self.q.predict_one(state)?))
    }

    /// Epsilon-greedy choice over the discrete set.
    pub fn select_action(&mut self, state: &[f64], epsilon: f64) -> Result<usize, AgentError> {
        let roll: f64 = self.rng.random();
        if roll < epsilon {
            Ok(self.rng.random_range(0..self.actions.len()))
        } else {
            self.greedy_action(state)
        }
    }

    /// `y = r` for terminal transitions, else `r + gamma·max_a Q_target(s′, a)`.
    pub fn td_targets(&self, batch: &Batch) -> Result<Vec<f64>, AgentError> {
        let q_next = self.q_target.predict(&batch.next_states)?;
        Ok((0..batch.len())
            .map(|i| {
                if batch.dones[i] {
                    batch.rewards[i]
                } else {
                    let max = q_next.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    batch.rewards[i] + self.config.gamma * max
                }
            })
            .collect())
    }

    /// One Adam step on the mean squared TD error of a sampled minibatch,
    /// followed by a Polyak update of the target network. Returns the loss
    /// before the step.
    pub fn update(&mut self, buffer: &ReplayBuffer) -> Result<f64, AgentError> {
        let sample = buffer.sample(self.config.batch_size, &mut self.rng)?;
        let batch = Batch::from_transitions(&sample, RewardSource::Scalar)?;
        self.update_on_batch(&batch)
    }

    pub fn update_on_batch(&mut self, batch: &Batch) -> Result<f64, AgentError> {
        let targets = self.td_targets(batch)?;
        let (q, cache) = self.q.forward(&batch.states)?;
        let n = batch.len() as f64;
        let mut grad = Matrix::zeros(q.rows(), q.cols());
        let mut loss = 0.0;
        for (i, (&a, y)) in batch.action_indices.iter().zip(&targets).enumerate() {
            if a >= q.cols() {
                return Err(AgentError::InvalidConfig(format!("action index {a} out of range")));
            }
            let d = q[(i, a)] - y;
            loss += d * d;
            grad[(i, a)] = 2.0 * d / n;
        }
        let (grads, _) = self.q.backward(&cache, &grad)?;
        self.optimizer.step(&mut self.q, &grads)?;
        soft_update(&mut self.q_target, &self.q, self.config.tau)?;
        Ok(loss / n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Dense};
    use crate::replay::{Reward, StoredAction, Transition};
    use crate::reward::EpisodeStatus;

    fn tiny_config() -> AgentConfig {
        AgentConfig {
            hidden: vec![],
            batch_size: 1,
            gamma: 0.99,
            ..Default::default()
        }
    }

    fn transition(s: f64, a: usize, r: f64, done: bool) -> Transition {
        Transition {
            state: vec![s],
            action: StoredAction::Discrete(a),
            reward: Reward::Scalar(r),
            next_state: vec![s + 1.0],
            done,
            status: if done { EpisodeStatus::CollisionWall } else { EpisodeStatus::Ongoing },
        }
    }

    /// 1-input linear Q-network with fixed weights per action.
    fn linear_q(w: &[f64], b: &[f64]) -> Mlp {
        Mlp::from_layers(vec![Dense::new(
            Matrix::from_vec(w.len(), 1, w.to_vec()).unwrap(),
            b.to_vec(),
            Activation::Identity,
        )
        .unwrap()])
        .unwrap()
    }

    fn agent_with(q: Mlp) -> Dqn {
        let mut a = Dqn::new(tiny_config(), 1, DiscreteActionSet::default(), 0).unwrap();
        a.optimizer = AdamState::new(&q, AdamConfig::with_lr(1e-3));
        a.q_target = q.clone();
        a.q = q;
        a
    }

    #[test]
    fn argmax_tie_break() {
        assert_eq!(greedy_index(&[1.0, 3.0, 2.0, 3.0, 0.0]), 1);
        assert_eq!(greedy_index(&[5.0, 0.0, 0.0, 0.0, 0.0]), 0);
    }

    #[test]
    fn greedy_with_zero_epsilon() {
        let mut a = agent_with(linear_q(&[0.0; 5], &[1.0, 3.0, 2.0, 3.0, 0.0]));
        for _ in 0..10 {
            assert_eq!(a.select_action(&[0.4], 0.0).unwrap(), 1);
        }
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut a = agent_with(linear_q(&[0.0; 5], &[5.0, 0.0, 0.0, 0.0, 0.0]));
        let n = 10_000;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            counts[a.select_action(&[0.0], 1.0).unwrap()] += 1;
        }
        let sigma = (n as f64 * 0.2 * 0.8).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * 0.2).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn td_target_examples() {
        // Target net outputs 10 for the best action at any next state.
        let a = agent_with(linear_q(&[0.0; 5], &[1.0, 10.0, 2.0, 3.0, 0.0]));
        let t1 = transition(0.0, 0, -2021.0, true);
        let t2 = transition(0.0, 0, -1.0, false);
        let batch = Batch::from_transitions(&[&t1, &t2], RewardSource::Scalar).unwrap();
        let y = a.td_targets(&batch).unwrap();
        assert_eq!(y[0], -2021.0);
        assert!((y[1] - 8.9).abs() < 1e-12);

        let mut myopic = a.clone();
        myopic.config.gamma = 0.0;
        let y = myopic.td_targets(&batch).unwrap();
        assert_eq!(y, vec![-2021.0, -1.0]);
    }

    #[test]
    fn single_transition_loss_is_hand_computed() {
        // Q(s)[a] = w_a·s + b_a ; s = 2, a = 3 → Q = 0.5·2 + 0.25 = 1.25.
        let mut a = agent_with(linear_q(&[0.0, 0.0, 0.0, 0.5, 0.0], &[0.0, 0.0, 0.0, 0.25, 0.0]));
        let t = transition(2.0, 3, 4.0, true);
        let batch = Batch::from_transitions(&[&t], RewardSource::Scalar).unwrap();
        let loss = a.update_on_batch(&batch).unwrap();
        assert!((loss - (1.25 - 4.0f64).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_has_zero_loss() {
        let mut a = agent_with(linear_q(&[0.0; 5], &[0.0, 0.0, 7.0, 0.0, 0.0]));
        let t = transition(1.0, 2, 7.0, true);
        let batch = Batch::from_transitions(&[&t], RewardSource::Scalar).unwrap();
        let before = a.q.clone();
        assert_eq!(a.update_on_batch(&batch).unwrap(), 0.0);
        assert_eq!(a.q, before);
    }

    #[test]
    fn deterministic_updates() {
        let cfg = AgentConfig {
            hidden: vec![8],
            batch_size: 4,
            ..Default::default()
        };
        let mut buf = ReplayBuffer::new(32).unwrap();
        for i in 0..16 {
            buf.push(transition(i as f64 * 0.1, i % 5, -(i as f64), i % 4 == 0)).unwrap();
        }
        let mut a = Dqn::new(cfg.clone(), 1, DiscreteActionSet::default(), 11).unwrap();
        let mut b = Dqn::new(cfg, 1, DiscreteActionSet::default(), 11).unwrap();
        for _ in 0..5 {
            assert_eq!(a.update(&buf).unwrap().to_bits(), b.update(&buf).unwrap().to_bits());
        }
        assert_eq!(a.q, b.q);
        assert_eq!(a.q_target, b.q_target);
    }

    #[test]
    fn insufficient_data() {
        let mut a = Dqn::new(AgentConfig::default(), 1, DiscreteActionSet::default(), 0).unwrap();
        let buf = ReplayBuffer::new(100).unwrap();
        assert!(matches!(a.update(&buf), Err(AgentError::Replay(_))));
    }
}
