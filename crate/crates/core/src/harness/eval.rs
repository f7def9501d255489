use std::path::Path;

use super::{HarnessError, RunConfig};
use crate::agents::Agent;
use crate::nn::Checkpoint;
use crate::reward::{reward_terms, scalar_reward, EpisodeStatus, RewardVector, NUM_OBJECTIVES};
use crate::sim::{Action, Observation, StageSpec, World};

/// Offset between training and evaluation placement seeds.
pub const EVAL_SEED_OFFSET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub success_rate: f64,
    pub collision_rate: f64,
    pub timeout_rate: f64,
    pub mean_total_reward: f64,
    /// Mean undiscounted per-episode sum of each reward component.
    pub mean_objective_vector: [f64; NUM_OBJECTIVES],
    pub episodes: usize,
}

/// Runs `episodes` episodes on placement seeds `seed + 10⁶ + i` driving the
/// robot with `policy`.
pub fn evaluate_policy<F>(spec: &StageSpec, seed: u64, episodes: usize, mut policy: F) -> Result<EvalReport, HarnessError>
where
    F: FnMut(&Observation) -> Result<Action, HarnessError>,
{
    if episodes == 0 {
        return Err(HarnessError::Invalid("eval_episodes must be >= 1".into()));
    }
    let mut world = World::new(spec.clone())?;
    let (mut success, mut collision, mut timeout) = (0usize, 0usize, 0usize);
    let mut reward_sum = 0.0;
    let mut vec_sum = [0.0; NUM_OBJECTIVES];
    for i in 0..episodes {
        let mut obs = world.reset(seed.wrapping_add(EVAL_SEED_OFFSET).wrapping_add(i as u64))?;
        let mut total = 0.0;
        let mut vector = RewardVector::default();
        loop {
            let action = policy(&obs)?;
            let (next, info) = world.step(action)?;
            let terms = reward_terms(&info.reward_input)?;
            total += scalar_reward(&terms, info.status);
            vector.add_assign(&RewardVector::from_terms(&terms, info.status));
            obs = next;
            if info.done {
                break;
            }
        }
        match world.status() {
            EpisodeStatus::Success => success += 1,
            EpisodeStatus::Timeout => timeout += 1,
            _ => collision += 1,
        }
        reward_sum += total;
        for (acc, v) in vec_sum.iter_mut().zip(vector.as_array()) {
            *acc += v;
        }
    }
    let n = episodes as f64;
    Ok(EvalReport {
        success_rate: success as f64 / n,
        collision_rate: collision as f64 / n,
        timeout_rate: timeout as f64 / n,
        mean_total_reward: reward_sum / n,
        mean_objective_vector: vec_sum.map(|v| v / n),
        episodes,
    })
}

/// Noise-free evaluation of a saved agent. The checkpoint must hold an agent
/// of `config.algo`; nothing is written.
pub fn run_eval(config: &RunConfig, checkpoint_path: &Path) -> Result<EvalReport, HarnessError> {
    config.validate()?;
    if !checkpoint_path.exists() {
        return Err(HarnessError::NotFound(checkpoint_path.to_path_buf()));
    }
    let ck = Checkpoint::load(checkpoint_path)?;
    let agent = Agent::from_checkpoint(&ck, config.algo, &config.agent_config(), config.seed)?;
    let spec = &config.stage;
    evaluate_policy(spec, config.seed, config.eval_episodes, |obs| {
        Ok(agent.greedy(&obs.features(spec))?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentError, AgentKind};
    use crate::sim::stage_build;

    #[test]
    fn rates_partition_for_random_dqn() {
        let dir = tempfile::tempdir().unwrap();
        let spec = stage_build("stageA").unwrap();
        let cfg = RunConfig {
            algo: AgentKind::Dqn,
            stage: spec.clone(),
            eval_episodes: 20,
            ..Default::default()
        };
        let agent = Agent::new(AgentKind::Dqn, &cfg.agent, Observation::feature_len(&spec), 3).unwrap();
        let path = dir.path().join("a.ckpt");
        agent.to_checkpoint().save(&path).unwrap();
        let before = std::fs::read(&path).unwrap();
        let r = run_eval(&cfg, &path).unwrap();
        assert!((r.success_rate + r.collision_rate + r.timeout_rate - 1.0).abs() < 1e-9);
        assert_eq!(r, run_eval(&cfg, &path).unwrap());
        assert_eq!(std::fs::read(&path).unwrap(), before);
    }

    #[test]
    fn kind_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let spec = stage_build("stage0").unwrap();
        let cfg = RunConfig {
            stage: spec.clone(),
            eval_episodes: 1,
            ..Default::default()
        };
        let agent = Agent::new(AgentKind::Ddpg, &cfg.agent, Observation::feature_len(&spec), 0).unwrap();
        let path = dir.path().join("a.ckpt");
        agent.to_checkpoint().save(&path).unwrap();
        assert!(matches!(
            run_eval(&cfg, &path),
            Err(HarnessError::Agent(AgentError::IncompatibleCheckpoint(_)))
        ));
        assert!(matches!(run_eval(&cfg, &dir.path().join("nope")), Err(HarnessError::NotFound(_))));
    }

    #[test]
    fn standing_still_times_out() {
        let mut spec = stage_build("stage0").unwrap();
        spec.time_limit = 5;
        let r = evaluate_policy(&spec, 0, 4, |_| Ok(Action::new(0.0, 0.0))).unwrap();
        assert_eq!(r.timeout_rate, 1.0);
        assert_eq!(r.mean_objective_vector[3], -5.0);
    }
}
