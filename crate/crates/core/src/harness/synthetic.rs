use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{DynGraphSequence, EdgeSet};
use crate::metp::InstanceData;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticParams {
    pub nodes: usize,
    /// Input snapshots `T`; one more is generated as ground truth.
    pub snapshots: usize,
    pub base_density: f64,
    pub deletion_prob: f64,
}

/// Samples one Erdős–Rényi base graph `G(N, p_base)` and derives `count`
/// instances from it. Every one of an instance's `T + 1` snapshots drops each
/// base edge independently with probability `p_del`.
pub fn gen_synthetic(
    params: SyntheticParams,
    count: usize,
    seed: u64,
) -> Result<Vec<InstanceData>> {
    let SyntheticParams {
        nodes,
        snapshots,
        base_density,
        deletion_prob,
    } = params;
    if nodes < 2 || snapshots == 0 {
        return Err(Error::Config(format!(
            "synthetic data needs N ≥ 2 and T ≥ 1, got N={nodes}, T={snapshots}"
        )));
    }
    for p in [base_density, deletion_prob] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("probability {p} outside [0, 1]")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut base = Vec::new();
    for u in 0..nodes {
        for v in u + 1..nodes {
            if rng.random_bool(base_density) {
                base.push((u, v));
            }
        }
    }

    (0..count)
        .map(|_| {
            let mut sets: Vec<EdgeSet> = (0..=snapshots)
                .map(|_| {
                    base.iter()
                        .copied()
                        .filter(|_| !rng.random_bool(deletion_prob))
                        .collect()
                })
                .collect();
            let truth = sets.pop().expect("T + 1 snapshots");
            Ok(InstanceData {
                clean: DynGraphSequence::from_edge_sets(nodes, &sets)?,
                truth,
            })
        })
        .collect()
}
