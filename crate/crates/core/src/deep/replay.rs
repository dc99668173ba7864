use std::collections::VecDeque;

use crate::env::RandomSource;
use crate::error::{invalid, Result};

/// One active pull. There is no action field and no reference state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperienceTuple {
    pub arm: usize,
    pub state: usize,
    pub reward: f64,
    pub next_state: usize,
}

/// Bounded FIFO experience store.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: VecDeque<ExperienceTuple>,
    capacity: usize,
}

impl ReplayBuffer {
    pub const DEFAULT_CAPACITY: usize = 10_000;

    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(invalid("replay capacity must be positive"));
        }
        Ok(Self {
            items: VecDeque::with_capacity(capacity),
            capacity,
        })
    }

    pub fn push(&mut self, t: ExperienceTuple) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> Option<&ExperienceTuple> {
        self.items.get(i)
    }

    /// `size` tuples drawn uniformly with replacement.
    pub fn sample(&self, size: usize, rng: &mut RandomSource) -> Vec<ExperienceTuple> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..size).map(|_| self.items[rng.below(self.items.len())]).collect()
    }
}
