//! Seeded fixtures shared by the benchmarks.

use std::sync::Arc;

use dynattack_core::agent::random_action;
use dynattack_core::harness::{gen_synthetic, SyntheticParams};
use dynattack_core::neural::Matrix;
use dynattack_core::{degree_feature, embed_sequence, EmbeddingSequence, InstanceData, Transition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn instance(nodes: usize, snapshots: usize, seed: u64) -> InstanceData {
    let params = SyntheticParams {
        nodes,
        snapshots,
        base_density: 0.1,
        deletion_prob: 0.1,
    };
    gen_synthetic(params, 1, seed)
        .expect("valid synthetic parameters")
        .remove(0)
}

pub fn embedding(data: &InstanceData, seed: u64) -> EmbeddingSequence {
    let feature = degree_feature(&data.clean, seed);
    embed_sequence(&data.clean, &feature).expect("feature matches the sequence")
}

/// `batch` transitions over random `N × 8` embeddings.
pub fn transitions(nodes: usize, snapshots: usize, batch: usize, seed: u64) -> Vec<Transition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..batch)
        .map(|i| {
            let steps = (0..snapshots)
                .map(|_| Matrix::from_fn(nodes, 8, |_, _| rng.random_range(-3.0..3.0)))
                .collect();
            Transition {
                embedding: Arc::new(EmbeddingSequence::new(steps).expect("N×8 steps")),
                action: random_action(nodes, &mut rng),
                reward: rng.random_range(-0.05..0.05),
                instance_id: i,
            }
        })
        .collect()
}

pub fn lstm_inputs(rows: usize, steps: usize, seed: u64) -> Vec<Matrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..steps)
        .map(|_| Matrix::from_fn(rows, 8, |_, _| rng.random_range(-3.0..3.0)))
        .collect()
}
