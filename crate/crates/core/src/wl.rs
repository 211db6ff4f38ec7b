//! Weisfeiler-Lehman colour refinement on temporal graphs.
//!
//! Supra-WL refines colours of `(node, t)` pairs using the node's own colour,
//! its colours at `t - 1` and `t + 1`, and the multiset of
//! `(neighbour colour, edge label, t)` within layer `t`. Layer-WL drops the
//! temporal terms and colours active nodes only.
//!
//! New colours are dense ranks of the sorted distinct signatures of a round,
//! so the map from signatures to colours is injective and independent of
//! node labels.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::temporal::{NodeId, TemporalGraph};

/// Colour of temporal neighbours outside `0..T` (or absent in reduced mode).
pub const BOUNDARY_COLOR: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WlMode {
    Supra,
    Layer,
}

impl std::str::FromStr for WlMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "supra" => Ok(WlMode::Supra),
            "layer" => Ok(WlMode::Layer),
            _ => Err(crate::Error::InvalidArgument(format!(
                "unknown WL mode {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InitialColoring {
    Constant,
    /// Per-node labels shared by all layers; unlisted nodes get label 0.
    FromLabels(BTreeMap<NodeId, u64>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WlConfig {
    pub mode: WlMode,
    pub max_rounds: usize,
    pub initial: InitialColoring,
    pub boundary_color: u32,
    /// Supra mode only: colour just the active `(node, t)` pairs instead of
    /// every node of the universe in every layer.
    pub reduced: bool,
    /// Use edge weights as edge labels instead of a unit label.
    pub weight_labels: bool,
}

impl WlConfig {
    pub fn new(mode: WlMode) -> Self {
        WlConfig {
            mode,
            max_rounds: 100,
            initial: InitialColoring::Constant,
            boundary_color: BOUNDARY_COLOR,
            reduced: false,
            weight_labels: false,
        }
    }

    pub fn supra() -> Self {
        Self::new(WlMode::Supra)
    }

    pub fn layer() -> Self {
        Self::new(WlMode::Layer)
    }

    pub fn with_max_rounds(mut self, rounds: usize) -> Self {
        self.max_rounds = rounds;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorPartition {
    /// Colour per `(node, t)`, dense in `0..num_colors`.
    pub colors: BTreeMap<(NodeId, usize), u32>,
    /// Refinement rounds performed.
    pub round: usize,
    /// The last round split no class.
    pub stable: bool,
    pub num_colors: usize,
    /// Class count after each round, starting with the initial colouring.
    pub class_counts: Vec<usize>,
    layers: usize,
}

/// Sorted `(colour, multiplicity)` pairs.
pub type Fingerprint = Vec<(u32, usize)>;

fn multiset(colors: impl Iterator<Item = u32>) -> Fingerprint {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for c in colors {
        *counts.entry(c).or_default() += 1;
    }
    counts.into_iter().collect()
}

impl ColorPartition {
    pub fn fingerprint(&self) -> Fingerprint {
        multiset(self.colors.values().copied())
    }

    pub fn layer_fingerprints(&self) -> Vec<Fingerprint> {
        (0..self.layers)
            .map(|t| {
                multiset(
                    self.colors
                        .iter()
                        .filter(|(&(_, kt), _)| kt == t)
                        .map(|(_, &c)| c),
                )
            })
            .collect()
    }

    pub fn color(&self, node: NodeId, t: usize) -> Option<u32> {
        self.colors.get(&(node, t)).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Signature {
    own: u32,
    temporal: Option<(u32, u32)>,
    neighbours: Vec<(u32, u64, usize)>,
}

/// Adjacency of the coloured `(node, t)` keys of one graph.
struct Indexed {
    keys: Vec<(NodeId, usize)>,
    neighbours: Vec<Vec<(usize, u64)>>,
    prev: Vec<Option<usize>>,
    next: Vec<Option<usize>>,
    layers: usize,
}

impl Indexed {
    fn new(g: &TemporalGraph, cfg: &WlConfig) -> Self {
        let full = cfg.mode == WlMode::Supra && !cfg.reduced;
        let mut keys = Vec::new();
        for (t, s) in g.snapshots().iter().enumerate() {
            if full {
                keys.extend((0..g.universe_size()).map(|v| (v, t)));
            } else {
                keys.extend(s.active_nodes().iter().map(|&v| (v, t)));
            }
        }
        let pos: HashMap<(NodeId, usize), usize> =
            keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let mut neighbours = vec![Vec::new(); keys.len()];
        for (t, s) in g.snapshots().iter().enumerate() {
            for e in s.edges() {
                let label = if cfg.weight_labels {
                    e.weight.to_bits()
                } else {
                    0
                };
                let (a, b) = (pos[&(e.u, t)], pos[&(e.v, t)]);
                neighbours[a].push((b, label));
                if a != b {
                    neighbours[b].push((a, label));
                }
            }
        }
        let temporal = |dt: isize| -> Vec<Option<usize>> {
            keys.iter()
                .map(|&(v, t)| {
                    let t2 = t.checked_add_signed(dt)?;
                    pos.get(&(v, t2)).copied()
                })
                .collect()
        };
        let (prev, next) = match cfg.mode {
            WlMode::Supra => (temporal(-1), temporal(1)),
            WlMode::Layer => (vec![None; keys.len()], vec![None; keys.len()]),
        };
        Indexed {
            layers: g.num_snapshots(),
            keys,
            neighbours,
            prev,
            next,
        }
    }

    fn initial(&self, cfg: &WlConfig) -> Vec<u64> {
        self.keys
            .iter()
            .map(|(v, _)| match &cfg.initial {
                InitialColoring::Constant => 0,
                InitialColoring::FromLabels(labels) => labels.get(v).copied().unwrap_or(0),
            })
            .collect()
    }

    fn signatures(&self, colors: &[u32], cfg: &WlConfig) -> Vec<Signature> {
        let at = |i: Option<usize>| i.map_or(cfg.boundary_color, |i| colors[i]);
        (0..self.keys.len())
            .map(|i| {
                let t = self.keys[i].1;
                let mut neighbours: Vec<_> = self.neighbours[i]
                    .iter()
                    .map(|&(j, label)| (colors[j], label, t))
                    .collect();
                neighbours.sort_unstable();
                Signature {
                    own: colors[i],
                    temporal: (cfg.mode == WlMode::Supra)
                        .then(|| (at(self.prev[i]), at(self.next[i]))),
                    neighbours,
                }
            })
            .collect()
    }
}

/// Dense ranks of values across several graphs sharing one colour space.
fn joint_rank<T: Ord + Clone>(lists: &[Vec<T>]) -> (Vec<Vec<u32>>, usize) {
    let table: BTreeMap<T, u32> = lists
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s, i as u32))
        .collect();
    let ranks = lists
        .iter()
        .map(|l| l.iter().map(|s| table[s]).collect())
        .collect();
    (ranks, table.len())
}

fn distinct(colors: &[u32]) -> usize {
    colors.iter().collect::<BTreeSet<_>>().len()
}

/// Lockstep refinement of several graphs in one colour space.
struct Run<'a> {
    cfg: &'a WlConfig,
    graphs: Vec<Indexed>,
    colors: Vec<Vec<u32>>,
    joint_classes: usize,
    class_counts: Vec<Vec<usize>>,
}

impl<'a> Run<'a> {
    fn new(graphs: &[&TemporalGraph], cfg: &'a WlConfig) -> Self {
        let graphs: Vec<Indexed> = graphs.iter().map(|g| Indexed::new(g, cfg)).collect();
        let init: Vec<Vec<u64>> = graphs.iter().map(|g| g.initial(cfg)).collect();
        let (colors, joint_classes) = joint_rank(&init);
        let class_counts = colors.iter().map(|c| vec![distinct(c)]).collect();
        Run {
            cfg,
            graphs,
            colors,
            joint_classes,
            class_counts,
        }
    }

    /// One refinement round; returns whether any class split.
    fn step(&mut self) -> bool {
        let sigs: Vec<Vec<Signature>> = self
            .graphs
            .iter()
            .zip(&self.colors)
            .map(|(g, c)| g.signatures(c, self.cfg))
            .collect();
        let (colors, classes) = joint_rank(&sigs);
        let split = classes != self.joint_classes;
        self.colors = colors;
        self.joint_classes = classes;
        for (counts, c) in self.class_counts.iter_mut().zip(&self.colors) {
            counts.push(distinct(c));
        }
        split
    }

    fn partition(&self, i: usize, round: usize, stable: bool) -> ColorPartition {
        let g = &self.graphs[i];
        ColorPartition {
            colors: g
                .keys
                .iter()
                .copied()
                .zip(self.colors[i].iter().copied())
                .collect(),
            round,
            stable,
            num_colors: distinct(&self.colors[i]),
            class_counts: self.class_counts[i].clone(),
            layers: g.layers,
        }
    }
}

/// Refines until a round splits no class or `max_rounds` is reached.
pub fn refine(g: &TemporalGraph, cfg: &WlConfig) -> ColorPartition {
    let mut run = Run::new(&[g], cfg);
    let mut round = 0;
    let mut stable = false;
    while round < cfg.max_rounds.max(1) {
        round += 1;
        if !run.step() {
            stable = true;
            break;
        }
    }
    let mut p = run.partition(0, round, stable);
    p.colors = compact(&p.colors);
    p
}

/// Exactly `rounds` refinement rounds, no early stop.
pub fn refine_rounds(g: &TemporalGraph, cfg: &WlConfig, rounds: usize) -> ColorPartition {
    let mut run = Run::new(&[g], cfg);
    let mut stable = false;
    for _ in 0..rounds {
        stable = !run.step();
    }
    let mut p = run.partition(0, rounds, stable);
    p.colors = compact(&p.colors);
    p
}

/// Renumbers colours densely in order of first appearance in sorted order.
fn compact(colors: &BTreeMap<(NodeId, usize), u32>) -> BTreeMap<(NodeId, usize), u32> {
    let ids: BTreeMap<u32, u32> = colors
        .values()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c, i as u32))
        .collect();
    colors.iter().map(|(&k, c)| (k, ids[c])).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Distinguished,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub classes: [usize; 2],
    pub joint_classes: usize,
    pub fingerprints_equal: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Distinction {
    pub mode: WlMode,
    pub verdict: Verdict,
    /// Round at which the verdict was reached.
    pub round: usize,
    pub note: Option<String>,
    pub transcript: Vec<RoundRecord>,
}

fn fingerprints_equal(run: &Run<'_>, mode: WlMode) -> bool {
    let a = run.partition(0, 0, false);
    let b = run.partition(1, 0, false);
    match mode {
        WlMode::Supra => a.fingerprint() == b.fingerprint(),
        WlMode::Layer => a.layer_fingerprints() == b.layer_fingerprints(),
    }
}

/// Refines both graphs in one colour space and compares fingerprints after
/// every round: the global colour multiset in supra mode, each layer's
/// multiset in layer mode. Graphs with different snapshot counts are
/// distinguished without refinement.
pub fn distinguish(g1: &TemporalGraph, g2: &TemporalGraph, cfg: &WlConfig) -> Distinction {
    if g1.num_snapshots() != g2.num_snapshots() {
        return Distinction {
            mode: cfg.mode,
            verdict: Verdict::Distinguished,
            round: 0,
            note: Some(format!(
                "snapshot counts differ ({} vs {})",
                g1.num_snapshots(),
                g2.num_snapshots()
            )),
            transcript: Vec::new(),
        };
    }
    let mut run = Run::new(&[g1, g2], cfg);
    let mut transcript = Vec::new();
    let mut round = 0;
    loop {
        let equal = fingerprints_equal(&run, cfg.mode);
        transcript.push(RoundRecord {
            round,
            classes: [run.class_counts[0][round], run.class_counts[1][round]],
            joint_classes: run.joint_classes,
            fingerprints_equal: equal,
        });
        let verdict = if !equal {
            Some((Verdict::Distinguished, None))
        } else if round >= cfg.max_rounds.max(1) {
            Some((Verdict::Inconclusive, Some("round cap reached".to_string())))
        } else {
            None
        };
        if let Some((verdict, note)) = verdict {
            return Distinction {
                mode: cfg.mode,
                verdict,
                round,
                note,
                transcript,
            };
        }
        round += 1;
        if !run.step() {
            // Nothing split, so the fingerprints cannot change any more.
            return Distinction {
                mode: cfg.mode,
                verdict: Verdict::Inconclusive,
                round,
                note: None,
                transcript,
            };
        }
    }
}

/// The built-in pair separating Supra-WL from Layer-WL: four nodes, two
/// layers. `G1` has edge (0,1) in both layers; `G2` has (0,1) then (2,3).
/// Corresponding layers are isomorphic, but in `G1` the same nodes are
/// active twice.
pub fn generate_counterexample() -> (TemporalGraph, TemporalGraph) {
    let g1 = TemporalGraph::from_layers(4, &[vec![(0, 1)], vec![(0, 1)]])
        .expect("valid built-in graph")
        .with_name("counterexample-g1");
    let g2 = TemporalGraph::from_layers(4, &[vec![(0, 1)], vec![(2, 3)]])
        .expect("valid built-in graph")
        .with_name("counterexample-g2");
    (g1, g2)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RefinementReport {
    pub rounds: usize,
    /// Keys coloured in both modes.
    pub keys: usize,
    pub pairs_checked: usize,
    /// `(a, b)` with equal supra colours but different layer colours.
    pub violations: Vec<((NodeId, usize), (NodeId, usize))>,
}

/// Runs both modes for exactly `rounds` rounds and checks that equal
/// Supra-WL colours imply equal Layer-WL colours on every pair of keys
/// coloured by both.
pub fn refinement_check(g: &TemporalGraph, rounds: usize) -> RefinementReport {
    let supra = refine_rounds(g, &WlConfig::supra(), rounds);
    let layer = refine_rounds(g, &WlConfig::layer(), rounds);
    let keys: Vec<((NodeId, usize), u32, u32)> = layer
        .colors
        .iter()
        .filter_map(|(k, &lc)| supra.colors.get(k).map(|&sc| (*k, sc, lc)))
        .collect();
    let mut violations = Vec::new();
    let mut pairs_checked = 0;
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            pairs_checked += 1;
            if keys[i].1 == keys[j].1 && keys[i].2 != keys[j].2 {
                violations.push((keys[i].0, keys[j].0));
            }
        }
    }
    RefinementReport {
        rounds,
        keys: keys.len(),
        pairs_checked,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edgeless_layer_is_one_class() {
        let g = TemporalGraph::from_layers(3, &[vec![]]).unwrap();
        let p = refine(&g, &WlConfig::supra());
        assert_eq!(p.num_colors, 1);
        assert_eq!(p.round, 1);
        assert!(p.stable);
    }

    #[test]
    fn path_center_splits_after_one_round() {
        let g = TemporalGraph::from_layers(3, &[vec![(0, 1), (1, 2)]]).unwrap();
        let p = refine_rounds(&g, &WlConfig::layer(), 1);
        assert_eq!(p.color(0, 0), p.color(2, 0));
        assert_ne!(p.color(0, 0), p.color(1, 0));
    }

    #[test]
    fn single_layer_supra_equals_layer() {
        let g =
            TemporalGraph::from_layers(6, &[vec![(0, 1), (1, 2), (2, 3), (3, 0), (3, 4), (4, 5)]])
                .unwrap();
        assert_eq!(
            refine(&g, &WlConfig::supra()).colors,
            refine(&g, &WlConfig::layer()).colors
        );
    }

    #[test]
    fn counterexample_verdicts() {
        let (g1, g2) = generate_counterexample();
        let s = distinguish(&g1, &g2, &WlConfig::supra());
        assert_eq!(s.verdict, Verdict::Distinguished);
        assert!(s.round <= 2);
        assert_eq!(
            distinguish(&g1, &g2, &WlConfig::layer()).verdict,
            Verdict::Inconclusive
        );
        let reduced = WlConfig {
            reduced: true,
            ..WlConfig::supra()
        };
        assert_eq!(
            distinguish(&g1, &g2, &reduced).verdict,
            Verdict::Distinguished
        );
    }

    #[test]
    fn identical_graphs_are_inconclusive() {
        let (g1, _) = generate_counterexample();
        for cfg in [WlConfig::supra(), WlConfig::layer()] {
            let d = distinguish(&g1, &g1, &cfg);
            assert_eq!(d.verdict, Verdict::Inconclusive);
            assert!(d.transcript.iter().all(|r| r.fingerprints_equal));
        }
    }

    #[test]
    fn degree_sequences_split_in_round_one() {
        let a = TemporalGraph::from_layers(4, &[vec![(0, 1)]]).unwrap();
        let b = TemporalGraph::from_layers(4, &[vec![(0, 1), (1, 2), (2, 3)]]).unwrap();
        let c = TemporalGraph::from_layers(4, &[vec![(0, 1), (1, 2), (1, 3)]]).unwrap();
        let d = distinguish(&b, &c, &WlConfig::layer());
        assert_eq!((d.verdict, d.round), (Verdict::Distinguished, 1));
        // Different active-node counts already differ at round 0.
        assert_eq!(distinguish(&a, &c, &WlConfig::layer()).round, 0);
    }

    #[test]
    fn mismatched_snapshot_counts() {
        let a = TemporalGraph::from_layers(2, &[vec![(0, 1)]]).unwrap();
        let b = TemporalGraph::from_layers(2, &[vec![(0, 1)], vec![(0, 1)]]).unwrap();
        let d = distinguish(&a, &b, &WlConfig::layer());
        assert_eq!(d.verdict, Verdict::Distinguished);
        assert!(d.note.is_some());
    }

    #[test]
    fn colours_are_dense_and_stable() {
        let g =
            TemporalGraph::from_layers(5, &[vec![(0, 1), (1, 2)], vec![(2, 3), (3, 4), (1, 2)]])
                .unwrap();
        let p = refine(&g, &WlConfig::supra());
        assert!(p.stable);
        let used: BTreeSet<u32> = p.colors.values().copied().collect();
        assert_eq!(used, (0..p.num_colors as u32).collect());
        assert!(p.class_counts.windows(2).all(|w| w[0] <= w[1]));
        let again = refine_rounds(&g, &WlConfig::supra(), p.round + 1);
        assert_eq!(again.num_colors, p.num_colors);
    }

    #[test]
    fn permutation_invariant_fingerprint() {
        let g =
            TemporalGraph::from_layers(5, &[vec![(0, 1), (1, 2)], vec![(2, 3), (3, 4), (0, 4)]])
                .unwrap();
        let perm = [3, 0, 4, 1, 2];
        let h = TemporalGraph::from_layers(
            5,
            &[
                vec![(perm[0], perm[1]), (perm[1], perm[2])],
                vec![(perm[2], perm[3]), (perm[3], perm[4]), (perm[0], perm[4])],
            ],
        )
        .unwrap();
        let cfg = WlConfig::supra();
        assert_eq!(
            refine(&g, &cfg).fingerprint(),
            refine(&h, &cfg).fingerprint()
        );
        assert_eq!(distinguish(&g, &h, &cfg).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn labels_seed_the_colouring() {
        let g = TemporalGraph::from_layers(2, &[vec![(0, 1)]]).unwrap();
        let cfg = WlConfig {
            initial: InitialColoring::FromLabels([(0, 7)].into()),
            ..WlConfig::layer()
        };
        let p = refine(&g, &cfg);
        assert_ne!(p.color(0, 0), p.color(1, 0));
    }

    #[test]
    fn refinement_holds_on_counterexample() {
        let (g1, g2) = generate_counterexample();
        for g in [g1, g2] {
            for rounds in 0..4 {
                let r = refinement_check(&g, rounds);
                assert!(r.violations.is_empty());
                assert_eq!(r.keys, 4);
            }
        }
    }
}
