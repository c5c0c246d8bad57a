//! Graph sequential embedding.
//!
//! A static per-node feature `F` is built once from the clean sequence:
//! four columns of Gaussian noise followed by the all-ones vector `d_0` and
//! the batch-normalised propagated degrees `Ã·d_0`, `Ã²·d_0`, `Ã³·d_0`.
//! Each (possibly perturbed) snapshot is then embedded as `Â_t·F`, and a
//! node-wise LSTM turns the resulting sequence into the state `h_T`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::DynGraphSequence;
use crate::neural::{static_batchnorm, LstmParams, LstmTape, Matrix};

/// Width of the degree feature and of both LSTM states.
pub const FEATURE_DIM: usize = 8;
pub const NOISE_COLUMNS: usize = 4;
pub const BATCHNORM_EPS: f64 = 1e-5;

/// Static `N × 8` node feature.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeFeature {
    matrix: Matrix,
}

impl DegreeFeature {
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn node_count(&self) -> usize {
        self.matrix.rows()
    }
}

pub fn degree_feature(clean: &DynGraphSequence, seed: u64) -> DegreeFeature {
    let n = clean.node_count();
    let avg = clean.average_adjacency();

    let mut propagated = Vec::with_capacity(3);
    let mut d = Matrix::from_vec(n, 1, vec![1.0; n]).expect("n×1");
    for _ in 0..3 {
        d = avg.matmul(&d).expect("N×N · N×1");
        propagated.push(static_batchnorm(d.as_slice(), BATCHNORM_EPS));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matrix = Matrix::zeros(n, FEATURE_DIM);
    for u in 0..n {
        let row = matrix.row_mut(u);
        for v in row.iter_mut().take(NOISE_COLUMNS) {
            *v = rng.sample(StandardNormal);
        }
        row[NOISE_COLUMNS] = 1.0;
        for (k, column) in propagated.iter().enumerate() {
            row[NOISE_COLUMNS + 1 + k] = column[u];
        }
    }
    DegreeFeature { matrix }
}

/// Degree embedding `X_t = Â_t·F`, one `N × 8` matrix per snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSequence {
    steps: Vec<Matrix>,
}

impl EmbeddingSequence {
    pub fn new(steps: Vec<Matrix>) -> Result<Self> {
        let Some(first) = steps.first() else {
            return Err(Error::Dimension("embedding sequence is empty".into()));
        };
        let shape = first.shape();
        if shape.1 != FEATURE_DIM || steps.iter().any(|m| m.shape() != shape) {
            return Err(Error::Dimension(
                "embedding steps must share an N×8 shape".into(),
            ));
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[Matrix] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.steps[0].rows()
    }

    /// Stacks the node rows of several sequences of equal shape, one matrix
    /// per time step, so a node-wise LSTM can process them in one pass.
    pub fn stack_rows(sequences: &[&EmbeddingSequence]) -> Result<Vec<Matrix>> {
        let first = sequences
            .first()
            .ok_or_else(|| Error::Dimension("nothing to stack".into()))?;
        let (len, n) = (first.len(), first.node_count());
        if sequences
            .iter()
            .any(|s| s.len() != len || s.node_count() != n)
        {
            return Err(Error::Dimension("stacked sequences differ in shape".into()));
        }
        (0..len)
            .map(|t| Matrix::vstack(sequences.iter().map(|s| &s.steps[t])))
            .collect()
    }
}

pub fn embed_sequence(
    seq: &DynGraphSequence,
    feature: &DegreeFeature,
) -> Result<EmbeddingSequence> {
    let n = seq.node_count();
    if feature.node_count() != n {
        return Err(Error::Dimension(format!(
            "feature over {} nodes, sequence over {n}",
            feature.node_count()
        )));
    }
    let f = &feature.matrix;
    let steps = seq
        .snapshots()
        .iter()
        .map(|snapshot| {
            let mut x = Matrix::zeros(n, FEATURE_DIM);
            for u in 0..n {
                let out = x.row_mut(u);
                for v in snapshot.neighbors(u) {
                    for (o, fv) in out.iter_mut().zip(f.row(v)) {
                        *o += fv;
                    }
                }
            }
            x
        })
        .collect();
    EmbeddingSequence::new(steps)
}

/// `S = h_T` of the given LSTM over the embedding sequence.
pub fn se_state(lstm: &LstmParams, x: &EmbeddingSequence) -> Result<(Matrix, LstmTape)> {
    lstm.forward(x.steps())
}

/// Separate sequential-embedding LSTMs for the policy and the critic.
#[derive(Clone, Debug, PartialEq)]
pub struct GsePair {
    pub policy: LstmParams,
    pub critic: LstmParams,
}

impl GsePair {
    pub fn random(rng: &mut impl Rng) -> Self {
        let policy = LstmParams::random(FEATURE_DIM, rng);
        let critic = LstmParams::random(FEATURE_DIM, rng);
        Self { policy, critic }
    }
}

pub type SharedEmbedding = Arc<EmbeddingSequence>;
