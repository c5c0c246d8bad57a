use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::AttackAction;
use crate::gse::SharedEmbedding;

/// One recorded interaction.
#[derive(Clone, Debug)]
pub struct Transition {
    pub embedding: SharedEmbedding,
    pub action: AttackAction,
    pub reward: f64,
    pub instance_id: usize,
}

/// Bounded FIFO replay memory shared by every attack instance.
#[derive(Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity.min(4096)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Appends, evicting the oldest transition when full.
    pub fn push(&mut self, transition: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(transition);
    }

    /// Uniform sample with replacement. Fails while fewer than `batch_size`
    /// transitions are stored.
    pub fn sample(&self, batch_size: usize, rng: &mut impl Rng) -> Result<Vec<Transition>> {
        if batch_size == 0 || self.items.len() < batch_size {
            return Err(Error::BufferUnderfilled {
                len: self.items.len(),
                requested: batch_size,
            });
        }
        Ok((0..batch_size)
            .map(|_| self.items[rng.random_range(0..self.items.len())].clone())
            .collect())
    }
}

pub fn buffer_push(buffer: &mut ReplayBuffer, transition: Transition) {
    buffer.push(transition);
}

pub fn buffer_sample(
    buffer: &ReplayBuffer,
    batch_size: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Transition>> {
    buffer.sample(batch_size, rng)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::gse::EmbeddingSequence;
    use crate::neural::Matrix;

    fn transition(id: usize) -> Transition {
        Transition {
            embedding: Arc::new(EmbeddingSequence::new(vec![Matrix::zeros(2, 8)]).unwrap()),
            action: AttackAction::new(0, 1, 0, 1),
            reward: id as f64,
            instance_id: id,
        }
    }

    #[test]
    fn fifo_eviction() {
        let mut buffer = ReplayBuffer::new(2);
        for id in 0..3 {
            buffer_push(&mut buffer, transition(id));
        }
        let ids: Vec<usize> = buffer.iter().map(|t| t.instance_id).collect();
        assert_eq!(ids, vec![1, 2]);
    }

    #[test]
    fn underfilled_sample_rejected() {
        let mut buffer = ReplayBuffer::new(10);
        buffer.push(transition(0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            buffer_sample(&buffer, 2, &mut rng),
            Err(Error::BufferUnderfilled {
                len: 1,
                requested: 2
            })
        ));
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let mut buffer = ReplayBuffer::new(10);
        for id in 0..10 {
            buffer.push(transition(id));
        }
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            buffer
                .sample(5, &mut rng)
                .unwrap()
                .iter()
                .map(|t| t.instance_id)
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
    }

    #[test]
    fn sampling_is_uniform() {
        let mut buffer = ReplayBuffer::new(10);
        for id in 0..10 {
            buffer.push(transition(id));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 10];
        for _ in 0..1000 {
            for t in buffer.sample(10, &mut rng).unwrap() {
                counts[t.instance_id] += 1;
            }
        }
        // 10 000 draws, p = 0.1: mean 1000, sd 30
        let sd = (10_000.0f64 * 0.1 * 0.9).sqrt();
        for c in counts {
            assert!((c as f64 - 1000.0).abs() < 5.0 * sd, "count {c}");
        }
    }
}
