//! Query-only surrogate link predictors and the query-counting oracle.
//!
//! Each predictor maps a dynamic graph sequence to the edge set expected in
//! the next snapshot. The oracle wraps a predictor together with the clean
//! ground truth and charges one query per prediction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{f1_score, DynGraphSequence, EdgeSet};

pub const DEFAULT_DECAY: f64 = 0.9;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Surrogate link predictor and its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predictor {
    /// Predicts the edges of the last snapshot.
    Persistence,
    /// Exponentially decayed edge frequency compared against a threshold.
    DecayFrequency {
        #[serde(default = "default_decay")]
        decay: f64,
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    /// Common-neighbour completion of the binarised average graph.
    CommonNeighbor {
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
}

fn default_decay() -> f64 {
    DEFAULT_DECAY
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl Default for Predictor {
    fn default() -> Self {
        Predictor::DecayFrequency {
            decay: DEFAULT_DECAY,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl Predictor {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Predictor::Persistence => Ok(()),
            Predictor::DecayFrequency { decay, threshold } => {
                if !(decay > 0.0 && decay <= 1.0) {
                    return Err(Error::Config(format!("decay {decay} outside (0, 1]")));
                }
                if !(0.0..=1.0).contains(&threshold) {
                    return Err(Error::Config(format!(
                        "threshold {threshold} outside [0, 1]"
                    )));
                }
                Ok(())
            }
            Predictor::CommonNeighbor { threshold } => {
                if !(threshold > 0.0 && threshold < 1.0) {
                    return Err(Error::Config(format!(
                        "binarisation threshold {threshold} outside (0, 1)"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Predictor::Persistence => "persistence",
            Predictor::DecayFrequency { .. } => "decay_frequency",
            Predictor::CommonNeighbor { .. } => "common_neighbor",
        }
    }

    pub fn predict(&self, seq: &DynGraphSequence) -> EdgeSet {
        match *self {
            Predictor::Persistence => persistence_predict(seq),
            Predictor::DecayFrequency { decay, threshold } => {
                decay_frequency_predict(seq, decay, threshold)
            }
            Predictor::CommonNeighbor { threshold } => common_neighbor_predict(seq, threshold),
        }
    }
}

pub fn persistence_predict(seq: &DynGraphSequence) -> EdgeSet {
    seq.last().edges()
}

/// Pairs whose decay-weighted presence `Σ λ^{T−t}·A_t / Σ λ^{T−t}` reaches `threshold`.
pub fn decay_frequency_predict(seq: &DynGraphSequence, decay: f64, threshold: f64) -> EdgeSet {
    let n = seq.node_count();
    let len = seq.len();
    let weights: Vec<f64> = (0..len).map(|t| decay.powi((len - 1 - t) as i32)).collect();
    let total: f64 = weights.iter().sum();
    let mut out = EdgeSet::new();
    for u in 0..n {
        for v in u + 1..n {
            let mut score = 0.0;
            for (snapshot, w) in seq.snapshots().iter().zip(&weights) {
                if snapshot.has_edge(u, v) {
                    score += w;
                }
            }
            if score / total >= threshold {
                out.insert(u, v);
            }
        }
    }
    out
}

/// Binarises the average adjacency at `threshold` into `B`, keeps every edge
/// of `B`, and adds the `m = |E(A_T)|` non-edges of `B` with the most common
/// neighbours. Only pairs sharing at least one neighbour are candidates; ties
/// go to the smaller canonical pair.
pub fn common_neighbor_predict(seq: &DynGraphSequence, threshold: f64) -> EdgeSet {
    let n = seq.node_count();
    let avg = seq.average_adjacency();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            (0..n)
                .filter(|&v| v != u && avg.get(u, v) >= threshold)
                .collect()
        })
        .collect();

    let mut out = EdgeSet::new();
    for (u, list) in neighbors.iter().enumerate() {
        for &v in list {
            out.insert(u, v);
        }
    }

    let m = seq.last().edge_count();
    if m == 0 {
        return out;
    }
    let mut shared = vec![0u32; n * n];
    for list in &neighbors {
        for (i, &a) in list.iter().enumerate() {
            for &b in &list[i + 1..] {
                shared[a * n + b] += 1;
            }
        }
    }
    let mut candidates: Vec<(u32, usize, usize)> = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let score = shared[u * n + v];
            if score > 0 && !out.contains(u, v) {
                candidates.push((score, u, v));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    for &(_, u, v) in candidates.iter().take(m) {
        out.insert(u, v);
    }
    out
}

/// Black-box target model with an exact query counter.
#[derive(Clone, Debug)]
pub struct LpdgOracle {
    predictor: Predictor,
    truth: EdgeSet,
    query_count: u64,
    query_limit: u64,
}

impl LpdgOracle {
    pub fn new(predictor: Predictor, truth: EdgeSet, query_limit: u64) -> Self {
        Self {
            predictor,
            truth,
            query_count: 0,
            query_limit,
        }
    }

    pub fn predictor(&self) -> &Predictor {
        &self.predictor
    }

    pub fn truth(&self) -> &EdgeSet {
        &self.truth
    }

    pub fn query_count(&self) -> u64 {
        self.query_count
    }

    pub fn query_limit(&self) -> u64 {
        self.query_limit
    }

    pub fn remaining(&self) -> u64 {
        self.query_limit - self.query_count
    }

    /// Predicts on `seq` and scores against the clean ground truth, charging one query.
    pub fn query(&mut self, seq: &DynGraphSequence) -> Result<(EdgeSet, f64)> {
        if self.query_count >= self.query_limit {
            return Err(Error::QueryBudgetExhausted {
                limit: self.query_limit,
            });
        }
        self.query_count += 1;
        let prediction = self.predictor.predict(seq);
        let f1 = f1_score(&prediction, &self.truth);
        Ok((prediction, f1))
    }
}
