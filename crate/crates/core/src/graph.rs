//! Dynamic graph sequences, perturbation actions, the F1 metric and budget arithmetic.
//!
//! Graphs are undirected and unweighted. Every snapshot is stored as a full
//! symmetric 0/1 adjacency matrix with a zero diagonal, and edge sets keep
//! each pair once in canonical `(min, max)` order.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::Matrix;

/// Set of undirected edges, each stored as `(min, max)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct EdgeSet {
    pairs: BTreeSet<(usize, usize)>,
}

impl EdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `{u, v}`. Self-loops are ignored. Returns whether the pair was new.
    pub fn insert(&mut self, u: usize, v: usize) -> bool {
        if u == v {
            return false;
        }
        self.pairs.insert(canonical(u, v))
    }

    pub fn remove(&mut self, u: usize, v: usize) -> bool {
        self.pairs.remove(&canonical(u, v))
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.pairs.contains(&canonical(u, v))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs in ascending canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn intersection_len(&self, other: &EdgeSet) -> usize {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .pairs
            .iter()
            .filter(|p| large.pairs.contains(p))
            .count()
    }

    /// Largest node index referenced, if any.
    pub fn max_node(&self) -> Option<usize> {
        self.pairs.iter().map(|&(_, v)| v).max()
    }
}

impl FromIterator<(usize, usize)> for EdgeSet {
    fn from_iter<I: IntoIterator<Item = (usize, usize)>>(iter: I) -> Self {
        let mut set = EdgeSet::new();
        for (u, v) in iter {
            set.insert(u, v);
        }
        set
    }
}

#[inline]
fn canonical(u: usize, v: usize) -> (usize, usize) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// F1 of a predicted edge set against the ground truth.
///
/// Returns 0 when either set is empty or nothing overlaps.
pub fn f1_score(pred: &EdgeSet, truth: &EdgeSet) -> f64 {
    if pred.is_empty() || truth.is_empty() {
        return 0.0;
    }
    let hits = pred.intersection_len(truth) as f64;
    let precision = hits / pred.len() as f64;
    let recall = hits / truth.len() as f64;
    if precision + recall == 0.0 {
        return 0.0;
    }
    2.0 * precision * recall / (precision + recall)
}

/// One symmetric binary adjacency matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Snapshot {
    node_count: usize,
    cells: Vec<u8>,
}

impl Snapshot {
    pub fn empty(node_count: usize) -> Self {
        Self {
            node_count,
            cells: vec![0; node_count * node_count],
        }
    }

    pub fn from_edges(node_count: usize, edges: &EdgeSet) -> Result<Self> {
        let mut snapshot = Self::empty(node_count);
        for (u, v) in edges.iter() {
            check_node(v, node_count)?;
            snapshot.set(u, v, true);
        }
        Ok(snapshot)
    }

    /// Builds a snapshot from a dense matrix, validating binarity, symmetry
    /// and the zero diagonal.
    pub fn from_dense(node_count: usize, cells: Vec<u8>) -> Result<Self> {
        if cells.len() != node_count * node_count {
            return Err(Error::InvalidGraph(format!(
                "{} cells for {node_count} nodes",
                cells.len()
            )));
        }
        for u in 0..node_count {
            if cells[u * node_count + u] != 0 {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            for v in 0..node_count {
                let a = cells[u * node_count + v];
                if a > 1 {
                    return Err(Error::InvalidGraph(format!("entry ({u},{v}) = {a}")));
                }
                if a != cells[v * node_count + u] {
                    return Err(Error::InvalidGraph(format!("asymmetric entry ({u},{v})")));
                }
            }
        }
        Ok(Self { node_count, cells })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.cells[u * self.node_count + v] != 0
    }

    /// Sets or clears `{u, v}` and its mirror. Diagonal coordinates are left untouched.
    #[inline]
    fn set(&mut self, u: usize, v: usize, present: bool) {
        if u == v {
            return;
        }
        let value = u8::from(present);
        self.cells[u * self.node_count + v] = value;
        self.cells[v * self.node_count + u] = value;
    }

    pub fn row(&self, u: usize) -> &[u8] {
        &self.cells[u * self.node_count..(u + 1) * self.node_count]
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(u)
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0)
            .map(|(v, _)| v)
    }

    pub fn edges(&self) -> EdgeSet {
        let mut set = EdgeSet::new();
        for u in 0..self.node_count {
            for v in u + 1..self.node_count {
                if self.has_edge(u, v) {
                    set.insert(u, v);
                }
            }
        }
        set
    }

    pub fn edge_count(&self) -> usize {
        self.cells.iter().filter(|&&a| a != 0).count() / 2
    }

    /// Number of upper-triangle entries that differ.
    pub fn diff(&self, other: &Snapshot) -> usize {
        let n = self.node_count;
        (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| self.has_edge(u, v) != other.has_edge(u, v))
            .count()
    }
}

/// `edges_of` for a single adjacency matrix.
pub fn edges_of(snapshot: &Snapshot) -> EdgeSet {
    snapshot.edges()
}

/// Ordered sequence of `T ≥ 1` snapshots over a fixed node set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DynGraphSequence {
    node_count: usize,
    snapshots: Vec<Snapshot>,
}

impl DynGraphSequence {
    pub fn new(node_count: usize, snapshots: Vec<Snapshot>) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::InvalidGraph(format!(
                "need at least 2 nodes, got {node_count}"
            )));
        }
        if snapshots.is_empty() {
            return Err(Error::InvalidGraph("sequence has no snapshots".into()));
        }
        if let Some(bad) = snapshots.iter().find(|s| s.node_count != node_count) {
            return Err(Error::InvalidGraph(format!(
                "snapshot over {} nodes in a {node_count}-node sequence",
                bad.node_count
            )));
        }
        Ok(Self {
            node_count,
            snapshots,
        })
    }

    pub fn from_edge_sets(node_count: usize, edge_sets: &[EdgeSet]) -> Result<Self> {
        let snapshots = edge_sets
            .iter()
            .map(|edges| Snapshot::from_edges(node_count, edges))
            .collect::<Result<Vec<_>>>()?;
        Self::new(node_count, snapshots)
    }

    /// `T` copies of the same edge set.
    pub fn constant(node_count: usize, edges: &EdgeSet, len: usize) -> Result<Self> {
        let snapshot = Snapshot::from_edges(node_count, edges)?;
        Self::new(node_count, vec![snapshot; len])
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of snapshots `T`.
    #[inline]
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("sequence is never empty")
    }

    /// Returns a copy with `action` applied to every snapshot.
    pub fn apply_action(&self, action: &AttackAction) -> Result<Self> {
        let mut next = self.clone();
        next.apply_action_in_place(action)?;
        Ok(next)
    }

    /// Adds `{add_u, add_v}` and then deletes `{del_u, del_v}` in every
    /// snapshot. When both pairs coincide the deletion wins; diagonal pairs
    /// leave the matrix unchanged.
    pub fn apply_action_in_place(&mut self, action: &AttackAction) -> Result<()> {
        action.validate(self.node_count)?;
        for snapshot in &mut self.snapshots {
            snapshot.set(action.add_u, action.add_v, true);
            snapshot.set(action.del_u, action.del_v, false);
        }
        Ok(())
    }

    /// Element-wise mean of the snapshots as an `N×N` matrix.
    pub fn average_adjacency(&self) -> Matrix {
        let n = self.node_count;
        let mut sum = Matrix::zeros(n, n);
        for snapshot in &self.snapshots {
            for (acc, &a) in sum.as_mut_slice().iter_mut().zip(&snapshot.cells) {
                *acc += f64::from(a);
            }
        }
        sum.scale(1.0 / self.snapshots.len() as f64);
        sum
    }
}

/// Differing upper-triangle entries summed across snapshots.
pub fn edge_diff(a: &DynGraphSequence, b: &DynGraphSequence) -> Result<usize> {
    if a.node_count != b.node_count || a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "sequences {}x{} and {}x{}",
            a.len(),
            a.node_count,
            b.len(),
            b.node_count
        )));
    }
    Ok(a.snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(x, y)| x.diff(y))
        .sum())
}

fn check_node(index: usize, node_count: usize) -> Result<()> {
    if index >= node_count {
        return Err(Error::NodeOutOfRange { index, node_count });
    }
    Ok(())
}

/// Add edge `{add_u, add_v}` and delete edge `{del_u, del_v}` across all snapshots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 4]", into = "[usize; 4]")]
pub struct AttackAction {
    pub add_u: usize,
    pub add_v: usize,
    pub del_u: usize,
    pub del_v: usize,
}

impl AttackAction {
    pub fn new(add_u: usize, add_v: usize, del_u: usize, del_v: usize) -> Self {
        Self {
            add_u,
            add_v,
            del_u,
            del_v,
        }
    }

    pub fn to_array(self) -> [usize; 4] {
        [self.add_u, self.add_v, self.del_u, self.del_v]
    }

    pub fn validate(&self, node_count: usize) -> Result<()> {
        for index in self.to_array() {
            check_node(index, node_count)?;
        }
        Ok(())
    }
}

impl From<[usize; 4]> for AttackAction {
    fn from([a, b, c, d]: [usize; 4]) -> Self {
        Self::new(a, b, c, d)
    }
}

impl From<AttackAction> for [usize; 4] {
    fn from(action: AttackAction) -> Self {
        action.to_array()
    }
}

/// `K = min(ceil(delta · N² / 2), n_cap)`.
pub fn perturbation_budget(node_count: usize, delta: f64, n_cap: usize) -> usize {
    let max_edges = (node_count as f64) * (node_count as f64) / 2.0;
    let raw = delta * max_edges;
    // Products like 0.02 · 2500 / 2 land a few ulps above the integer.
    let nearest = raw.round();
    let k = if (raw - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        raw.ceil()
    };
    (k.max(0.0) as usize).min(n_cap)
}

/// Perturbation and interaction limits for one attack instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackBudget {
    pub delta: f64,
    pub n_cap: usize,
    pub k_limit: usize,
    pub interaction_limit: u64,
}

impl AttackBudget {
    /// Budget with an absolute interaction limit `I`.
    pub fn new(
        node_count: usize,
        delta: f64,
        n_cap: usize,
        interaction_limit: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Config(format!("delta {delta} outside [0, 1]")));
        }
        let k_limit = perturbation_budget(node_count, delta, n_cap);
        if interaction_limit < k_limit as u64 {
            return Err(Error::Config(format!(
                "interaction limit {interaction_limit} below perturbation budget {k_limit}"
            )));
        }
        Ok(Self {
            delta,
            n_cap,
            k_limit,
            interaction_limit,
        })
    }

    /// Budget with `I = multiplier · K`.
    pub fn with_multiplier(
        node_count: usize,
        delta: f64,
        n_cap: usize,
        multiplier: u64,
    ) -> Result<Self> {
        let k = perturbation_budget(node_count, delta, n_cap) as u64;
        Self::new(node_count, delta, n_cap, multiplier * k)
    }
}
