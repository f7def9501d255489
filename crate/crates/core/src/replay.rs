//! Fixed-capacity experience replay with seeded uniform sampling.

use rand::Rng;
use thiserror::Error;

use crate::reward::{EpisodeStatus, RewardVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReplayError {
    #[error("reward kind mismatch: buffer holds {buffer:?} rewards, transition has {got:?}")]
    TagMismatch { buffer: RewardKind, got: RewardKind },
    #[error("buffer holds {len} transitions, batch of {requested} requested")]
    InsufficientData { len: usize, requested: usize },
    #[error("state and next_state lengths differ ({0} vs {1})")]
    StateLength(usize, usize),
    #[error("capacity must be at least 1")]
    ZeroCapacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardKind {
    Scalar,
    Vector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reward {
    Scalar(f64),
    Vector(RewardVector),
}

impl Reward {
    pub fn kind(&self) -> RewardKind {
        match self {
            Reward::Scalar(_) => RewardKind::Scalar,
            Reward::Vector(_) => RewardKind::Vector,
        }
    }
}

/// Stored action: an index into a discrete action set, or a normalized
/// continuous command.
#[derive(Debug, Clone, PartialEq)]
pub enum StoredAction {
    Discrete(usize),
    Continuous(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: StoredAction,
    pub reward: Reward,
    pub next_state: Vec<f64>,
    pub done: bool,
    pub status: EpisodeStatus,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: Vec<Transition>,
    write_index: usize,
    kind: Option<RewardKind>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self, ReplayError> {
        if capacity == 0 {
            return Err(ReplayError::ZeroCapacity);
        }
        Ok(Self {
            capacity,
            storage: Vec::with_capacity(capacity.min(1 << 16)),
            write_index: 0,
            kind: None,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn reward_kind(&self) -> Option<RewardKind> {
        self.kind
    }

    /// Appends, overwriting the oldest entry once full.
    pub fn push(&mut self, t: Transition) -> Result<(), ReplayError> {
        let got = t.reward.kind();
        match self.kind {
            Some(k) if k != got => return Err(ReplayError::TagMismatch { buffer: k, got }),
            _ => self.kind = Some(got),
        }
        if t.state.len() != t.next_state.len() {
            return Err(ReplayError::StateLength(t.state.len(), t.next_state.len()));
        }
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.write_index] = t;
        }
        self.write_index = (self.write_index + 1) % self.capacity;
        Ok(())
    }

    /// Entries from oldest to newest.
    pub fn iter_fifo(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.storage.len() < self.capacity {
            0
        } else {
            self.write_index
        };
        self.storage[split..].iter().chain(self.storage[..split].iter())
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.storage.get(index)
    }

    /// `batch_size` distinct slot indices drawn uniformly.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<usize>, ReplayError> {
        if self.len() < batch_size {
            return Err(ReplayError::InsufficientData {
                len: self.len(),
                requested: batch_size,
            });
        }
        Ok(rand::seq::index::sample(rng, self.len(), batch_size).into_vec())
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<&Transition>, ReplayError> {
        Ok(self
            .sample_indices(batch_size, rng)?
            .into_iter()
            .map(|i| &self.storage[i])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(tag: f64) -> Transition {
        Transition {
            state: vec![tag],
            action: StoredAction::Discrete(0),
            reward: Reward::Scalar(tag),
            next_state: vec![tag + 1.0],
            done: false,
            status: EpisodeStatus::Ongoing,
        }
    }

    fn tags(b: &ReplayBuffer) -> Vec<f64> {
        b.iter_fifo().map(|t| t.state[0]).collect()
    }

    #[test]
    fn push_and_overwrite() {
        let mut b = ReplayBuffer::new(2).unwrap();
        b.push(tr(1.0)).unwrap();
        assert_eq!(b.len(), 1);
        b.push(tr(2.0)).unwrap();
        b.push(tr(3.0)).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(tags(&b), vec![2.0, 3.0]);
    }

    #[test]
    fn fifo_order_with_sentinels() {
        let mut b = ReplayBuffer::new(5).unwrap();
        for i in 0..13 {
            b.push(tr(i as f64)).unwrap();
        }
        assert_eq!(tags(&b), vec![8.0, 9.0, 10.0, 11.0, 12.0]);
    }

    #[test]
    fn tag_mismatch() {
        let mut b = ReplayBuffer::new(4).unwrap();
        b.push(tr(0.0)).unwrap();
        let mut v = tr(1.0);
        v.reward = Reward::Vector(RewardVector::default());
        assert_eq!(
            b.push(v),
            Err(ReplayError::TagMismatch {
                buffer: RewardKind::Scalar,
                got: RewardKind::Vector
            })
        );
        assert!(ReplayBuffer::new(0).is_err());
    }

    #[test]
    fn sample_contracts() {
        let mut b = ReplayBuffer::new(10).unwrap();
        for i in 0..6 {
            b.push(tr(i as f64)).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut all: Vec<f64> = b.sample(6, &mut rng).unwrap().iter().map(|t| t.state[0]).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);

        let a = b.sample_indices(3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let c = b.sample_indices(3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, c);

        assert_eq!(
            b.sample(7, &mut rng).unwrap_err(),
            ReplayError::InsufficientData { len: 6, requested: 7 }
        );
    }

    #[test]
    fn uniform_frequencies() {
        let mut b = ReplayBuffer::new(10).unwrap();
        for i in 0..10 {
            b.push(tr(i as f64)).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut counts = [0usize; 10];
        for _ in 0..n {
            let idx = b.sample_indices(1, &mut rng).unwrap()[0];
            assert!(idx < b.len());
            counts[idx] += 1;
        }
        let p = 0.1;
        let mean = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() < 3.0 * sigma, "{counts:?}");
        }
    }
}
