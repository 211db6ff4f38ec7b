//! Snapshot-based dynamic graphs.
//!
//! A [`TemporalGraph`] is an ordered run of [`Snapshot`]s over one shared node
//! universe `0..universe_size`. Graphs are undirected; each snapshot stores an
//! unordered pair at most once, with `u <= v`.

mod ingest;

pub use ingest::{
    ingest_edge_list, parse_edge_list, write_edge_list, IngestOptions, IngestStats, Ingested,
    Partitioning,
};

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    t: usize,
    edges: Vec<Edge>,
    active: Vec<NodeId>,
}

impl Snapshot {
    /// Builds a snapshot from undirected pairs. Repeated pairs (in either
    /// orientation) are merged by summing their weights.
    pub fn new<I>(t: usize, edges: I, allow_self_loops: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let mut merged: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
        for (a, b, w) in edges {
            if a == b && !allow_self_loops {
                return Err(Error::InvalidGraph(format!(
                    "self-loop on node {a} in snapshot {t}"
                )));
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a},{b}) in snapshot {t} has non-positive weight {w}"
                )));
            }
            *merged.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
        }
        Ok(Self::from_merged(t, merged))
    }

    /// Unit-weight convenience constructor; rejects self-loops.
    pub fn unweighted(t: usize, pairs: &[(NodeId, NodeId)]) -> Result<Self> {
        Self::new(t, pairs.iter().map(|&(u, v)| (u, v, 1.0)), false)
    }

    fn from_merged(t: usize, merged: BTreeMap<(NodeId, NodeId), f64>) -> Self {
        let edges: Vec<Edge> = merged
            .into_iter()
            .map(|((u, v), weight)| Edge { u, v, weight })
            .collect();
        let mut active: Vec<NodeId> = edges.iter().flat_map(|e| [e.u, e.v]).collect();
        active.sort_unstable();
        active.dedup();
        Snapshot { t, edges, active }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Edges sorted by `(u, v)` with `u <= v`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Sorted ids of nodes incident to at least one edge.
    pub fn active_nodes(&self) -> &[NodeId] {
        &self.active
    }

    pub fn is_active(&self, node: NodeId) -> bool {
        self.active.binary_search(&node).is_ok()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_self_loops(&self) -> bool {
        self.edges.iter().any(|e| e.u == e.v)
    }

    fn with_t(&self, t: usize) -> Self {
        Snapshot {
            t,
            edges: self.edges.clone(),
            active: self.active.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GraphMeta {
    pub name: String,
    pub source: Option<PathBuf>,
}

/// Ordered snapshots `t = 0..T-1` over the node universe `0..universe_size`.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalGraph {
    snapshots: Vec<Snapshot>,
    universe_size: usize,
    /// First global-node id when [`crate::supra::add_global_nodes`] was applied;
    /// the global node of layer `t` is `offset + t`.
    global_offset: Option<usize>,
    pub meta: GraphMeta,
}

impl TemporalGraph {
    pub fn new(snapshots: Vec<Snapshot>, universe_size: usize) -> Result<Self> {
        for (i, s) in snapshots.iter().enumerate() {
            if s.t != i {
                return Err(Error::InvalidGraph(format!(
                    "snapshot at position {i} has t = {}",
                    s.t
                )));
            }
            if let Some(&max) = s.active.last() {
                if max >= universe_size {
                    return Err(Error::InvalidGraph(format!(
                        "node {max} in snapshot {i} is outside the universe of size {universe_size}"
                    )));
                }
            }
        }
        Ok(TemporalGraph {
            snapshots,
            universe_size,
            global_offset: None,
            meta: GraphMeta::default(),
        })
    }

    /// Builds a unit-weight graph from one edge list per layer. The universe is
    /// `max(universe_size, max id + 1)`.
    pub fn from_layers(universe_size: usize, layers: &[Vec<(NodeId, NodeId)>]) -> Result<Self> {
        let snapshots = layers
            .iter()
            .enumerate()
            .map(|(t, pairs)| Snapshot::unweighted(t, pairs))
            .collect::<Result<Vec<_>>>()?;
        let needed = snapshots
            .iter()
            .filter_map(|s| s.active.last())
            .map(|&m| m + 1)
            .max()
            .unwrap_or(0);
        Self::new(snapshots, universe_size.max(needed))
    }

    pub(crate) fn with_global_offset(mut self, offset: Option<usize>) -> Self {
        self.global_offset = offset;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.meta.name = name.into();
        self
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn snapshot(&self, t: usize) -> &Snapshot {
        &self.snapshots[t]
    }

    pub fn num_snapshots(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn global_offset(&self) -> Option<usize> {
        self.global_offset
    }

    pub fn is_global(&self, node: NodeId) -> bool {
        self.global_offset.is_some_and(|o| node >= o)
    }

    pub fn num_edges(&self) -> usize {
        self.snapshots.iter().map(Snapshot::num_edges).sum()
    }

    /// Number of distinct node ids active in at least one snapshot.
    pub fn num_active_nodes(&self) -> usize {
        let mut seen = vec![false; self.universe_size];
        for s in &self.snapshots {
            for &v in &s.active {
                seen[v] = true;
            }
        }
        seen.into_iter().filter(|&b| b).count()
    }

    /// Sub-sequence of snapshots re-indexed from zero; the universe is kept.
    pub fn slice(&self, w: Window) -> Result<Self> {
        w.check(self.num_snapshots())?;
        let snapshots = self.snapshots[w.start..w.end()]
            .iter()
            .enumerate()
            .map(|(t, s)| s.with_t(t))
            .collect();
        Ok(TemporalGraph {
            snapshots,
            universe_size: self.universe_size,
            global_offset: self.global_offset,
            meta: self.meta.clone(),
        })
    }

    /// Contiguous train/validation/test segments with boundaries at
    /// `floor(T * train_frac)` and `floor(T * (train_frac + val_frac))`.
    pub fn chronological_split(
        &self,
        train_frac: f64,
        val_frac: f64,
    ) -> Result<(Self, Self, Self)> {
        let in_unit = |f: f64| f > 0.0 && f < 1.0;
        if !in_unit(train_frac) || !in_unit(val_frac) || train_frac + val_frac >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "split fractions {train_frac}/{val_frac} must lie in (0,1) and sum below 1"
            )));
        }
        let n = self.num_snapshots();
        let b1 = (n as f64 * train_frac).floor() as usize;
        let b2 = ((n as f64 * (train_frac + val_frac)).floor() as usize).min(n);
        if b1 == 0 {
            return Err(Error::EmptySegment("empty training segment"));
        }
        if b2 <= b1 {
            return Err(Error::EmptySegment("empty validation segment"));
        }
        if b2 >= n {
            return Err(Error::EmptySegment("empty test segment"));
        }
        Ok((
            self.slice(Window::new(0, b1))?,
            self.slice(Window::new(b1, b2 - b1))?,
            self.slice(Window::new(b2, n - b2))?,
        ))
    }
}

/// A run of `length` consecutive snapshots starting at `start`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Window {
    pub start: usize,
    pub length: usize,
}

impl Window {
    pub fn new(start: usize, length: usize) -> Self {
        Window { start, length }
    }

    /// The most recent `length` snapshots of a `snapshots`-long sequence,
    /// clamped to the whole sequence when it is shorter.
    pub fn latest(snapshots: usize, length: usize) -> Self {
        let length = length.min(snapshots);
        Window {
            start: snapshots - length,
            length,
        }
    }

    pub fn full(snapshots: usize) -> Self {
        Window::new(0, snapshots)
    }

    pub fn end(&self) -> usize {
        self.start + self.length
    }

    pub fn check(&self, snapshots: usize) -> Result<()> {
        if self.length == 0 || self.end() > snapshots {
            return Err(Error::WindowOutOfRange {
                start: self.start,
                length: self.length,
                snapshots,
            });
        }
        Ok(())
    }
}
