//! Supra-adjacency and supra-Laplacian assembly.
//!
//! Row order is lexicographic in `(layer, node)`. In reduced mode only nodes
//! active in a layer get a row, and a node is coupled to its copy in the next
//! layer only when it is active in both.

use std::io::Write;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::temporal::{NodeId, Snapshot, TemporalGraph};

/// Adds one global node per snapshot, linked with unit weight to every active
/// node of that snapshot. The global node of layer `t` gets id
/// `universe_size + t`.
pub fn add_global_nodes(g: &TemporalGraph) -> Result<TemporalGraph> {
    if g.is_empty() {
        return Err(Error::InvalidGraph(
            "cannot add global nodes to an empty graph".into(),
        ));
    }
    let base = g.universe_size();
    let t_count = g.num_snapshots();
    let snapshots = g
        .snapshots()
        .iter()
        .map(|s| {
            let hub = base + s.t();
            let edges = s
                .edges()
                .iter()
                .map(|e| (e.u, e.v, e.weight))
                .chain(s.active_nodes().iter().map(|&v| (v, hub, 1.0)));
            Snapshot::new(s.t(), edges, s.has_self_loops())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = TemporalGraph::new(snapshots, base + t_count)?.with_global_offset(Some(base));
    out.meta = g.meta.clone();
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixKind {
    Adjacency,
    Laplacian,
}

impl MatrixKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MatrixKind::Adjacency => "adjacency",
            MatrixKind::Laplacian => "laplacian",
        }
    }
}

/// Maps supra rows to `(layer, node)` pairs and back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupraIndexMap {
    entries: Vec<(usize, NodeId)>,
    global_offset: Option<usize>,
}

impl SupraIndexMap {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(layer, node)` pairs in row order.
    pub fn entries(&self) -> &[(usize, NodeId)] {
        &self.entries
    }

    pub fn entry(&self, row: usize) -> (usize, NodeId) {
        self.entries[row]
    }

    pub fn row_of(&self, t: usize, node: NodeId) -> Option<usize> {
        self.entries.binary_search(&(t, node)).ok()
    }

    pub fn is_global_row(&self, row: usize) -> bool {
        self.global_offset.is_some_and(|o| self.entries[row].1 >= o)
    }

    /// Supra row of the global node of each layer in `layers`, when present.
    pub fn global_rows(&self, layers: std::ops::Range<usize>) -> Vec<Option<usize>> {
        layers
            .map(|t| self.global_offset.and_then(|o| self.row_of(t, o + t)))
            .collect()
    }

    pub fn layer_rows(&self, t: usize) -> std::ops::Range<usize> {
        let lo = self.entries.partition_point(|&(l, _)| l < t);
        let hi = self.entries.partition_point(|&(l, _)| l <= t);
        lo..hi
    }
}

/// Sparse symmetric supra matrix with its row index map.
#[derive(Clone, Debug, PartialEq)]
pub struct SupraMatrix {
    pub kind: MatrixKind,
    pub mu: f64,
    pub matrix: CsrMatrix,
    pub index_map: SupraIndexMap,
}

impl SupraMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.rows() == 0
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    /// Matrix export: `%%supra kind rows cols nnz mu` header, then canonical
    /// `row col value` triplets at 17 significant digits.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "%%supra {} {} {} {} {:.16e}",
            self.kind.as_str(),
            self.rows(),
            self.rows(),
            self.nnz(),
            self.mu
        )?;
        for (i, j, v) in self.matrix.triplets() {
            writeln!(w, "{i} {j} {v:.16e}")?;
        }
        Ok(())
    }

    /// Index map export: one `supra_row t node` line per row.
    pub fn write_index_map<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (r, &(t, v)) in self.index_map.entries.iter().enumerate() {
            writeln!(w, "{r} {t} {v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupraOptions {
    /// Inter-layer coupling weight.
    pub mu: f64,
    /// Keep only rows of nodes active in their layer.
    pub reduced: bool,
    /// Use stored edge weights; otherwise every edge counts 1.
    pub use_weights: bool,
}

impl Default for SupraOptions {
    fn default() -> Self {
        SupraOptions {
            mu: 1.0,
            reduced: true,
            use_weights: false,
        }
    }
}

pub fn build_supra_adjacency(g: &TemporalGraph, opts: &SupraOptions) -> Result<SupraMatrix> {
    if g.is_empty() {
        return Err(Error::InvalidGraph(
            "supra matrix of a graph with no snapshots".into(),
        ));
    }
    if !(opts.mu > 0.0 && opts.mu.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "mu must be positive, got {}",
            opts.mu
        )));
    }
    assemble(g, 0..g.num_snapshots(), opts)
}

fn assemble(
    g: &TemporalGraph,
    layers: std::ops::Range<usize>,
    opts: &SupraOptions,
) -> Result<SupraMatrix> {
    let universe = g.universe_size();
    let mut entries = Vec::new();
    for t in layers.clone() {
        let s = g.snapshot(t);
        if s.has_self_loops() {
            return Err(Error::InvalidGraph(format!(
                "snapshot {t} has self-loops, which supra matrices do not support"
            )));
        }
        if opts.reduced {
            entries.extend(s.active_nodes().iter().map(|&v| (t, v)));
        } else {
            entries.extend((0..universe).map(|v| (t, v)));
        }
    }
    let index_map = SupraIndexMap {
        entries,
        global_offset: g.global_offset(),
    };

    let mut trip = Vec::new();
    for t in layers.clone() {
        let s = g.snapshot(t);
        for e in s.edges() {
            let w = if opts.use_weights { e.weight } else { 1.0 };
            let (a, b) = (
                index_map.row_of(t, e.u).expect("endpoint has a row"),
                index_map.row_of(t, e.v).expect("endpoint has a row"),
            );
            trip.push((a, b, w));
            trip.push((b, a, w));
        }
        if t + 1 < layers.end {
            let next = g.snapshot(t + 1);
            let mut couple = |v: NodeId| {
                if let (Some(a), Some(b)) = (index_map.row_of(t, v), index_map.row_of(t + 1, v)) {
                    trip.push((a, b, opts.mu));
                    trip.push((b, a, opts.mu));
                }
            };
            if opts.reduced {
                s.active_nodes()
                    .iter()
                    .filter(|&&v| next.is_active(v))
                    .for_each(|&v| couple(v));
            } else {
                (0..universe).for_each(couple);
            }
        }
    }
    Ok(SupraMatrix {
        kind: MatrixKind::Adjacency,
        mu: opts.mu,
        matrix: CsrMatrix::from_triplets(index_map.len(), trip),
        index_map,
    })
}

/// Combinatorial Laplacian `D - A` of an adjacency-kind supra matrix.
pub fn laplacian_from_adjacency(a: &SupraMatrix) -> Result<SupraMatrix> {
    if a.kind != MatrixKind::Adjacency {
        return Err(Error::InvalidArgument(
            "expected an adjacency matrix".into(),
        ));
    }
    let n = a.rows();
    let mut trip = Vec::with_capacity(a.nnz() + n);
    for i in 0..n {
        let degree = a.matrix.row_sum(i);
        if degree != 0.0 {
            trip.push((i, i, degree));
        }
        trip.extend(
            a.matrix
                .row(i)
                .filter(|&(j, _)| j != i)
                .map(|(j, v)| (i, j, -v)),
        );
    }
    Ok(SupraMatrix {
        kind: MatrixKind::Laplacian,
        mu: a.mu,
        matrix: CsrMatrix::from_triplets(n, trip),
        index_map: a.index_map.clone(),
    })
}

pub fn build_supra_laplacian(g: &TemporalGraph, opts: &SupraOptions) -> Result<SupraMatrix> {
    laplacian_from_adjacency(&build_supra_adjacency(g, opts)?)
}

/// One single-layer Laplacian per snapshot. Index maps keep the snapshot's
/// own layer index; `mu` only matters as recorded metadata.
pub fn layer_laplacians(g: &TemporalGraph, opts: &SupraOptions) -> Result<Vec<SupraMatrix>> {
    if g.is_empty() {
        return Err(Error::InvalidGraph(
            "layer Laplacians of an empty graph".into(),
        ));
    }
    (0..g.num_snapshots())
        .map(|t| laplacian_from_adjacency(&assemble(g, t..t + 1, opts)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn two_layer_edge() -> TemporalGraph {
        TemporalGraph::from_layers(2, &[vec![(0, 1)], vec![(0, 1)]]).unwrap()
    }

    fn full(mu: f64) -> SupraOptions {
        SupraOptions {
            mu,
            reduced: false,
            use_weights: false,
        }
    }

    #[test]
    fn global_nodes_attach_to_active_nodes() {
        let g =
            TemporalGraph::from_layers(5, &[vec![(0, 1)], vec![], vec![(2, 4), (3, 4)]]).unwrap();
        let h = add_global_nodes(&g).unwrap();
        assert_eq!(h.universe_size(), 8);
        assert_eq!(h.global_offset(), Some(5));
        assert_eq!(h.snapshot(0).num_edges(), 3);
        assert!(h.snapshot(0).is_active(5));
        assert_eq!(h.snapshot(1).num_edges(), 0);
        assert_eq!(h.snapshot(2).num_edges(), 2 + 3);
        assert!(h.is_global(7) && !h.is_global(4));
    }

    #[test]
    fn two_layer_full_adjacency() {
        let a = build_supra_adjacency(&two_layer_edge(), &full(1.0)).unwrap();
        #[rustfmt::skip]
        let expect = DMatrix::from_row_slice(4, 4, &[
            0.0, 1.0, 1.0, 0.0,
            1.0, 0.0, 0.0, 1.0,
            1.0, 0.0, 0.0, 1.0,
            0.0, 1.0, 1.0, 0.0,
        ]);
        assert_eq!(a.matrix.to_dense(), expect);
        assert_eq!(a.nnz(), 8);
    }

    #[test]
    fn two_layer_laplacian_corner_block() {
        let mu = 0.5;
        let l = build_supra_laplacian(&two_layer_edge(), &full(mu)).unwrap();
        // L_1 + mu I = [[1.5, -1], [-1, 1.5]]
        assert_eq!(l.matrix.get(0, 0), 1.0 + mu);
        assert_eq!(l.matrix.get(0, 1), -1.0);
        assert_eq!(l.matrix.get(0, 2), -mu);
        assert_eq!(l.matrix.get(1, 3), -mu);
    }

    #[test]
    fn single_layer_has_no_couplings() {
        let g = TemporalGraph::from_layers(3, &[vec![(0, 1), (1, 2)]]).unwrap();
        let a = build_supra_adjacency(&g, &full(3.0)).unwrap();
        assert_eq!(a.nnz(), 4);
        let l = laplacian_from_adjacency(&a).unwrap();
        let d: Vec<f64> = (0..3).map(|i| l.matrix.get(i, i)).collect();
        assert_eq!(d, vec![1.0, 2.0, 1.0]);
        assert_eq!(l.matrix.get(0, 1), -1.0);
        assert_eq!(l.matrix.get(0, 2), 0.0);
    }

    #[test]
    fn reduced_mode_drops_inactive_rows_and_couplings() {
        let g = TemporalGraph::from_layers(4, &[vec![(0, 1), (2, 3)], vec![(0, 1)]]).unwrap();
        let a = build_supra_adjacency(&g, &SupraOptions::default()).unwrap();
        assert_eq!(a.rows(), 6);
        assert!(a.index_map.row_of(1, 3).is_none());
        let r03 = a.index_map.row_of(0, 3).unwrap();
        let row: Vec<_> = a.matrix.row(r03).collect();
        assert_eq!(row, vec![(a.index_map.row_of(0, 2).unwrap(), 1.0)]);
        let r00 = a.index_map.row_of(0, 0).unwrap();
        let r10 = a.index_map.row_of(1, 0).unwrap();
        assert_eq!(a.matrix.get(r00, r10), 1.0);
    }

    #[test]
    fn reduced_laplacian_has_no_zero_diagonal() {
        let g = TemporalGraph::from_layers(6, &[vec![(0, 1)], vec![(3, 4)]]).unwrap();
        let l = build_supra_laplacian(&g, &SupraOptions::default()).unwrap();
        for i in 0..l.rows() {
            assert!(l.matrix.get(i, i) > 0.0);
        }
    }

    #[test]
    fn skipped_layer_gets_no_shortcut_coupling() {
        let g = TemporalGraph::from_layers(3, &[vec![(0, 1)], vec![(1, 2)], vec![(0, 1)]]).unwrap();
        let a = build_supra_adjacency(&g, &SupraOptions::default()).unwrap();
        let r00 = a.index_map.row_of(0, 0).unwrap();
        let r20 = a.index_map.row_of(2, 0).unwrap();
        assert_eq!(a.matrix.get(r00, r20), 0.0);
        assert_eq!(a.matrix.row(r00).count(), 1);
    }

    #[test]
    fn layer_laplacians_per_snapshot() {
        let g =
            TemporalGraph::from_layers(4, &[vec![(0, 1)], vec![], vec![(1, 2), (2, 3)]]).unwrap();
        let ls = layer_laplacians(&g, &SupraOptions::default()).unwrap();
        assert_eq!(ls.len(), 3);
        assert!(ls[1].is_empty());
        assert_eq!(ls[2].index_map.entries(), &[(2, 1), (2, 2), (2, 3)]);
        assert_eq!(ls[2].matrix.get(1, 1), 2.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = two_layer_edge();
        assert!(build_supra_adjacency(&g, &full(0.0)).is_err());
        let empty = TemporalGraph::new(vec![], 3).unwrap();
        assert!(build_supra_adjacency(&empty, &full(1.0)).is_err());
        let l = build_supra_laplacian(&g, &full(1.0)).unwrap();
        assert!(laplacian_from_adjacency(&l).is_err());
    }

    #[test]
    fn export_format() {
        let a = build_supra_adjacency(&two_layer_edge(), &full(1.0)).unwrap();
        let mut buf = Vec::new();
        a.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "%%supra adjacency 4 4 8 1.0000000000000000e0"
        );
        assert_eq!(lines.next().unwrap(), "0 1 1.0000000000000000e0");
        assert_eq!(text.lines().count(), 9);

        let mut buf = Vec::new();
        a.write_index_map(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "0 0 0\n1 0 1\n2 1 0\n3 1 1\n"
        );
    }
}
