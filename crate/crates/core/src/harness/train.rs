use std::path::{Path, PathBuf};

use super::metrics::{EpisodeRecord, MetricsWriter};
use super::{io_err, HarnessError, RunConfig};
use crate::agents::{Agent, AgentKind};
use crate::replay::{ReplayBuffer, Reward, Transition};
use crate::reward::{reward_terms, EpisodeStatus, scalar_reward, RewardVector};
use crate::sim::{Observation, World};

/// Outcome of a finished training run.
#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub records: Vec<EpisodeRecord>,
    pub agent: Agent,
    pub final_checkpoint: PathBuf,
}

/// Placement seed of training episode `i`.
pub(crate) fn episode_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

/// Trains per `config`, writing `metrics.csv` and checkpoints to
/// `config.output_dir`.
pub fn run_training(config: &RunConfig) -> Result<Vec<EpisodeRecord>, HarnessError> {
    Ok(train_agent(config)?.records)
}

pub fn train_agent(config: &RunConfig) -> Result<TrainingRun, HarnessError> {
    config.validate()?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let spec = config.stage.clone();
    let mut world = World::new(spec.clone())?;
    let mut agent = Agent::new(config.algo, &config.agent_config(), Observation::feature_len(&spec), config.seed)?;
    let agent_cfg = agent.config().clone();
    let mut buffer = ReplayBuffer::new(agent_cfg.buffer_capacity)?;
    let mut metrics = MetricsWriter::create(&out.join("metrics.csv"))?;
    let vector_rewards = config.algo == AgentKind::MoTd3;

    let mut records = Vec::with_capacity(config.episodes);
    let mut total_steps: u64 = 0;
    for ep in 0..config.episodes {
        let mut state = world.reset(episode_seed(config.seed, ep))?.features(&spec);
        let explore = match config.algo {
            AgentKind::Dqn => agent_cfg.epsilon_at(ep, config.episodes),
            _ => agent_cfg.sigma,
        };
        let mut total_reward = 0.0;
        let mut vector = RewardVector::default();
        let (mut critic_sum, mut critic_n) = (0.0, 0u32);
        let (mut actor_sum, mut actor_n) = (0.0, 0u32);
        loop {
            let (action, stored) = if total_steps < agent_cfg.warmup_steps {
                agent.random_action()
            } else {
                agent.act(&state, explore)?
            };
            let (next_obs, info) = world.step(action)?;
            let terms = reward_terms(&info.reward_input)?;
            let r = scalar_reward(&terms, info.status);
            let rv = RewardVector::from_terms(&terms, info.status);
            total_reward += r;
            vector.add_assign(&rv);
            let next_state = next_obs.features(&spec);
            buffer.push(Transition {
                state: std::mem::take(&mut state),
                action: stored,
                reward: if vector_rewards { Reward::Vector(rv) } else { Reward::Scalar(r) },
                next_state: next_state.clone(),
                done: info.done,
                status: info.status,
            })?;
            total_steps += 1;
            if total_steps >= agent_cfg.warmup_steps && buffer.len() >= agent_cfg.batch_size {
                let stats = agent.update(&buffer)?;
                critic_sum += stats.critic_loss;
                critic_n += 1;
                if let Some(a) = stats.actor_loss {
                    actor_sum += a;
                    actor_n += 1;
                }
            }
            state = next_state;
            if info.done {
                break;
            }
        }
        let mean = |s: f64, n: u32| if n == 0 { f64::NAN } else { s / n as f64 };
        let record = EpisodeRecord {
            episode: ep,
            total_reward,
            reward_vector: vector,
            steps: world.step_count(),
            status: world.status(),
            critic_loss: mean(critic_sum, critic_n),
            actor_loss: mean(actor_sum, actor_n),
            explore,
        };
        metrics.append(&record)?;
        log::debug!(
            "episode {ep}: reward {:.1} status {} steps {}",
            record.total_reward,
            record.status,
            record.steps
        );
        if (ep + 1) % 100 == 0 {
            let successes = records[records.len().saturating_sub(99)..]
                .iter()
                .chain([&record])
                .filter(|r| r.status == EpisodeStatus::Success)
                .count();
            log::info!("{}: episode {}/{} success(last 100) {successes}", config.algo, ep + 1, config.episodes);
        }
        records.push(record);
        if config.checkpoint_every > 0 && (ep + 1) % config.checkpoint_every == 0 && ep + 1 < config.episodes {
            save_checkpoint(&agent, config, ep + 1, &out.join(format!("checkpoint_ep{:06}.ckpt", ep + 1)))?;
        }
    }
    let final_checkpoint = out.join("final.ckpt");
    save_checkpoint(&agent, config, config.episodes, &final_checkpoint)?;
    Ok(TrainingRun {
        records,
        agent,
        final_checkpoint,
    })
}

fn save_checkpoint(agent: &Agent, config: &RunConfig, episodes_done: usize, path: &Path) -> Result<(), HarnessError> {
    let mut ck = agent.to_checkpoint();
    ck.set_meta("run.stage", config.stage.name.clone());
    ck.set_meta("run.seed", config.seed.to_string());
    ck.set_meta("run.episodes_done", episodes_done.to_string());
    ck.save(path)?;
    Ok(())
}
