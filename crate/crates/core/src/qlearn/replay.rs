use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::numerics::RngStream;

pub const DEFAULT_CAPACITY: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// A sampled batch as parallel lists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayBatch {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<Vec<f64>>,
    pub dones: Vec<bool>,
}

impl ReplayBatch {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Bounded FIFO of transitions; the oldest entry is dropped once full.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    entries: VecDeque<Transition>,
}

impl Default for ReplayMemory {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY).expect("default capacity is positive")
    }
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            entries: VecDeque::with_capacity(capacity.min(4096)),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.entries.iter()
    }

    pub fn remember(&mut self, transition: Transition) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(transition);
    }

    /// Draws `min(len, batch_size)` distinct entries uniformly.
    pub fn sample(&self, batch_size: usize, rng: &mut RngStream) -> Result<ReplayBatch> {
        if self.entries.is_empty() {
            return Err(Error::domain("cannot sample an empty replay memory"));
        }
        let k = batch_size.min(self.entries.len());
        let mut batch = ReplayBatch::default();
        for i in rng.sample_without_replacement(self.entries.len(), k) {
            let t = &self.entries[i];
            batch.states.push(t.state.clone());
            batch.actions.push(t.action);
            batch.rewards.push(t.reward);
            batch.next_states.push(t.next_state.clone());
            batch.dones.push(t.done);
        }
        Ok(batch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tr(tag: f64) -> Transition {
        Transition {
            state: vec![tag],
            action: 0,
            reward: tag,
            next_state: vec![tag + 1.0],
            done: false,
        }
    }

    #[test]
    fn oldest_entry_evicted() {
        let mut mem = ReplayMemory::new(2).unwrap();
        for i in 0..3 {
            mem.remember(tr(i as f64));
        }
        let rewards: Vec<f64> = mem.iter().map(|t| t.reward).collect();
        assert_eq!(rewards, vec![1.0, 2.0]);
    }

    #[test]
    fn oversized_batch_returns_everything() {
        let mut mem = ReplayMemory::new(10).unwrap();
        for i in 0..4 {
            mem.remember(tr(i as f64));
        }
        let batch = mem.sample(32, &mut RngStream::new(0)).unwrap();
        assert_eq!(batch.len(), 4);
        let mut seen = batch.rewards.clone();
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn empty_sample_is_error() {
        let mem = ReplayMemory::default();
        assert_eq!(mem.capacity(), 100_000);
        assert!(mem.sample(1, &mut RngStream::new(0)).is_err());
    }

    #[test]
    fn single_draws_are_balanced() {
        let mut mem = ReplayMemory::new(2).unwrap();
        mem.remember(tr(0.0));
        mem.remember(tr(1.0));
        let mut rng = RngStream::new(9);
        let n = 10_000;
        let ones = (0..n)
            .filter(|_| mem.sample(1, &mut rng).unwrap().rewards[0] == 1.0)
            .count() as f64;
        let sd = (n as f64 * 0.25).sqrt();
        assert!((ones - n as f64 / 2.0).abs() < 3.0 * sd);
    }

    proptest! {
        #[test]
        fn bounded_and_fifo(cap in 1usize..20, inserts in 0usize..60) {
            let mut mem = ReplayMemory::new(cap).unwrap();
            for i in 0..inserts {
                mem.remember(tr(i as f64));
                prop_assert!(mem.len() <= cap);
            }
            let kept: Vec<f64> = mem.iter().map(|t| t.reward).collect();
            let start = inserts.saturating_sub(cap);
            let expected: Vec<f64> = (start..inserts).map(|i| i as f64).collect();
            prop_assert_eq!(kept, expected);
        }
    }
}
