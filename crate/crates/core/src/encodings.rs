//! Positional-encoding tables from supra-Laplacian (SLPE) and per-layer
//! Laplacian (LPE) eigenvectors.
//!
//! A table maps `(t, node)` to a vector of width `c`: the node's rows of the
//! `k` smallest eigenvectors, optionally followed by the matching eigenvalues.
//! Trajectory variants concatenate every captured solver iterate, so their
//! width is `K * k` with `K = ceil(maxiter / stride)`. Time indices in a table
//! are absolute snapshot indices of the source graph.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use log::warn;
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::eigen::{
    build_trajectory, dense_reference_with_budget, lanczos, lobpcg, EigenResult, Iterate,
    SolverConfig,
};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::supra::{
    add_global_nodes, build_supra_laplacian, layer_laplacians, SupraMatrix, SupraOptions,
};
use crate::temporal::{NodeId, TemporalGraph, Window};

/// Eigenvalues below this count as trivial when `drop_trivial` is set.
pub const TRIVIAL_EIGENVALUE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PeKind {
    Slpe,
    Lpe,
}

/// How the eigenvectors are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Approx {
    /// Lanczos run to convergence.
    Exact,
    /// Iteration-capped LOBPCG.
    Inexact,
    /// Every captured LOBPCG iterate, concatenated.
    Trajectory,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Variant {
    pub kind: PeKind,
    pub approx: Approx,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            PeKind::Slpe => "slpe",
            PeKind::Lpe => "lpe",
        };
        let approx = match self.approx {
            Approx::Exact => "e",
            Approx::Inexact => "i",
            Approx::Trajectory => "t",
        };
        write!(f, "{kind}-{approx}")
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown PE variant {s:?}"));
        let (kind, approx) = s
            .to_ascii_lowercase()
            .split_once('-')
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .ok_or_else(bad)?;
        let kind = match kind.as_str() {
            "slpe" => PeKind::Slpe,
            "lpe" => PeKind::Lpe,
            _ => return Err(bad()),
        };
        let approx = match approx.as_str() {
            "e" => Approx::Exact,
            "i" => Approx::Inexact,
            "t" => Approx::Trajectory,
            _ => return Err(bad()),
        };
        Ok(Variant { kind, approx })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeOptions {
    pub mu: f64,
    pub include_eigenvalues: bool,
    /// Skip eigenpairs with eigenvalue below [`TRIVIAL_EIGENVALUE`].
    pub drop_trivial: bool,
    /// Keep rows of the per-layer global nodes in the output.
    pub keep_global: bool,
    pub global_nodes: bool,
    pub use_weights: bool,
}

impl Default for PeOptions {
    fn default() -> Self {
        PeOptions {
            mu: 1.0,
            include_eigenvalues: false,
            drop_trivial: false,
            keep_global: false,
            global_nodes: true,
            use_weights: false,
        }
    }
}

/// Header fields of a PE file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeHeader {
    pub variant: Variant,
    pub k: usize,
    pub width: usize,
    pub window: Window,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PeMeta {
    pub include_eigenvalues: bool,
    pub solver: Option<SolverConfig>,
    /// Set when an exact solve ended without converging.
    pub not_converged: bool,
    /// Snapshot indices whose layers had fewer than `k` usable eigenpairs.
    pub padded_layers: Vec<usize>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeTable {
    pub header: PeHeader,
    entries: BTreeMap<(usize, NodeId), Vec<f64>>,
    pub meta: PeMeta,
}

impl PeTable {
    pub fn get(&self, t: usize, node: NodeId) -> Option<&[f64]> {
        self.entries.get(&(t, node)).map(Vec::as_slice)
    }

    /// Entries sorted by `(t, node)`.
    pub fn entries(&self) -> impl Iterator<Item = (&(usize, NodeId), &Vec<f64>)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn width(&self) -> usize {
        self.header.width
    }

    /// `#pe ...` header then `t node v_1 ... v_c` lines at 17 significant digits.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let h = &self.header;
        writeln!(
            w,
            "#pe variant={} k={} c={} window={},{} seed={}",
            h.variant, h.k, h.width, h.window.start, h.window.length, h.seed
        )?;
        for (&(t, node), vec) in &self.entries {
            write!(w, "{t} {node}")?;
            for v in vec {
                write!(w, " {v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<PeTable> {
        let mut lines = r.lines().enumerate();
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::Format("empty PE file".into()))?;
        let first = first.map_err(|e| Error::io("<pe>", e))?;
        let header = parse_pe_header(&first)?;
        let mut entries = BTreeMap::new();
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io("<pe>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: i + 1, msg };
            let mut fields = line.split_whitespace();
            let mut index = || -> Result<usize> {
                fields
                    .next()
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| parse_err("bad t/node field".into()))
            };
            let (t, node) = (index()?, index()?);
            let vec = line
                .split_whitespace()
                .skip(2)
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| parse_err(format!("bad value {f:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if vec.len() != header.width {
                return Err(parse_err(format!(
                    "expected {} values, got {}",
                    header.width,
                    vec.len()
                )));
            }
            entries.insert((t, node), vec);
        }
        Ok(PeTable {
            header,
            entries,
            meta: PeMeta::default(),
        })
    }
}

fn parse_pe_header(line: &str) -> Result<PeHeader> {
    let rest = line
        .strip_prefix("#pe")
        .ok_or_else(|| Error::Format("missing #pe header".into()))?;
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    for tok in rest.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad header field {tok:?}")))?;
        fields.insert(k, v);
    }
    let get = |key: &str| {
        fields
            .get(key)
            .copied()
            .ok_or_else(|| Error::Format(format!("header lacks {key}")))
    };
    let num = |key: &str| -> Result<u64> {
        get(key)?
            .parse()
            .map_err(|_| Error::Format(format!("bad {key} in header")))
    };
    let (ws, wl) = get("window")?
        .split_once(',')
        .ok_or_else(|| Error::Format("bad window in header".into()))?;
    let parse_usize = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Format("bad window in header".into()))
    };
    Ok(PeHeader {
        variant: get("variant")?.parse()?,
        k: num("k")? as usize,
        width: num("c")? as usize,
        window: Window::new(parse_usize(ws)?, parse_usize(wl)?),
        seed: num("seed")?,
    })
}

/// Independent stream seed for sub-tasks (layers, sign draws) of one run.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const SIGN_STREAM: u64 = 0x5167;

/// Eigen-block of one matrix ready for scattering: per-row encodings and
/// the eigenvalue tail shared by every row.
struct Block {
    vectors: DMatrix<f64>,
    values: Vec<f64>,
    padded: bool,
    converged: bool,
    notes: Vec<String>,
}

fn random_signs(k: usize, seed: u64) -> Vec<f64> {
    let mut rng = crate::eigen::rng_from(seed);
    (0..k)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Keeps the first `k` columns whose eigenvalue is non-trivial (or the first
/// `k` columns when `drop_trivial` is off).
fn usable_columns(values: &[f64], k: usize, drop_trivial: bool) -> Vec<usize> {
    (0..values.len())
        .filter(|&j| !drop_trivial || values[j] >= TRIVIAL_EIGENVALUE)
        .take(k)
        .collect()
}

fn restrict(result: &EigenResult, cols: &[usize]) -> EigenResult {
    let pick = |m: &DMatrix<f64>| DMatrix::from_fn(m.nrows(), cols.len(), |r, c| m[(r, cols[c])]);
    let pick_vals = |v: &[f64]| cols.iter().map(|&j| v[j]).collect::<Vec<_>>();
    EigenResult {
        values: pick_vals(&result.values),
        vectors: pick(&result.vectors),
        method: result.method,
        iterations: result.iterations,
        converged: result.converged,
        residual_norms: pick_vals(&result.residual_norms),
        trajectory: result.trajectory.as_ref().map(|t| {
            t.iter()
                .map(|it| Iterate {
                    values: pick_vals(&it.values),
                    vectors: pick(&it.vectors),
                })
                .collect()
        }),
        events: result.events.clone(),
    }
}

fn solve_block(
    m: &CsrMatrix,
    cfg: &SolverConfig,
    approx: Approx,
    opts: &PeOptions,
    allow_padding: bool,
) -> Result<Block> {
    let rows = m.dim();
    let k = cfg.k;
    let extra = if opts.drop_trivial {
        m.connected_components()
    } else {
        0
    };
    let need = k + extra;
    let snapshots = match approx {
        Approx::Trajectory => cfg.max_snapshots(),
        _ => 1,
    };
    let mut notes = Vec::new();

    let result = if need > rows {
        if !allow_padding {
            return Err(Error::TooManyEigenpairs {
                k: need,
                rows,
                bound: "k <= supra rows",
            });
        }
        dense_reference_with_budget(m, rows, usize::MAX)?
    } else {
        let sub = SolverConfig {
            k: need,
            capture_trajectory: approx == Approx::Trajectory,
            ..cfg.clone()
        };
        match approx {
            Approx::Exact => lanczos(m, &sub)?,
            _ if 2 * need > rows => {
                notes.push(format!(
                    "{rows}-row matrix solved densely (LOBPCG needs k <= rows/2)"
                ));
                dense_reference_with_budget(m, need, usize::MAX)?
            }
            _ => lobpcg(m, &sub)?,
        }
    };

    let cols = usable_columns(&result.values, k, opts.drop_trivial);
    let padded = cols.len() < k;
    if padded && !allow_padding {
        return Err(Error::TooManyEigenpairs {
            k,
            rows,
            bound: "k non-trivial eigenpairs",
        });
    }
    let result = restrict(&result, &cols);
    let got = cols.len();
    let sign_seed = derive_seed(cfg.seed, SIGN_STREAM);

    let mut vectors = DMatrix::zeros(rows, snapshots * k);
    let mut values = vec![0.0; snapshots * k];
    if approx == Approx::Trajectory && result.trajectory.as_ref().is_some_and(|t| !t.is_empty()) {
        let traj = build_trajectory(&result, sign_seed)?;
        for s in 0..snapshots {
            // Runs that stop early repeat their final iterate.
            let src = s.min(traj.iterates - 1);
            for j in 0..got {
                vectors
                    .column_mut(s * k + j)
                    .copy_from(&traj.vectors.column(src * got + j));
                values[s * k + j] = traj.values[src * got + j];
            }
        }
    } else {
        let signs = random_signs(got, sign_seed);
        for s in 0..snapshots {
            for j in 0..got {
                vectors
                    .column_mut(s * k + j)
                    .copy_from(&(result.vectors.column(j) * signs[j]));
                values[s * k + j] = result.values[j];
            }
        }
    }
    let converged = approx != Approx::Exact || result.converged;
    Ok(Block {
        vectors,
        values,
        padded,
        converged,
        notes,
    })
}

fn window_graph(g: &TemporalGraph, w: Window, opts: &PeOptions) -> Result<TemporalGraph> {
    let gw = g.slice(w)?;
    if opts.global_nodes {
        add_global_nodes(&gw)
    } else {
        Ok(gw)
    }
}

fn supra_options(opts: &PeOptions) -> SupraOptions {
    SupraOptions {
        mu: opts.mu,
        reduced: true,
        use_weights: opts.use_weights,
    }
}

fn scatter(
    entries: &mut BTreeMap<(usize, NodeId), Vec<f64>>,
    m: &SupraMatrix,
    block: &Block,
    w: Window,
    opts: &PeOptions,
) {
    for (r, &(t, v)) in m.index_map.entries().iter().enumerate() {
        if m.index_map.is_global_row(r) && !opts.keep_global {
            continue;
        }
        let mut vec: Vec<f64> = block.vectors.row(r).iter().copied().collect();
        if opts.include_eigenvalues {
            vec.extend_from_slice(&block.values);
        }
        entries.insert((w.start + t, v), vec);
    }
}

fn width(cfg: &SolverConfig, approx: Approx, opts: &PeOptions) -> usize {
    let base = match approx {
        Approx::Trajectory => cfg.max_snapshots() * cfg.k,
        _ => cfg.k,
    };
    if opts.include_eigenvalues {
        2 * base
    } else {
        base
    }
}

/// Supra-Laplacian encodings of one window: slice, add global nodes, build
/// the reduced supra-Laplacian, solve, and scatter rows back to `(t, node)`.
pub fn compute_slpe(
    g: &TemporalGraph,
    w: Window,
    cfg: &SolverConfig,
    approx: Approx,
    opts: &PeOptions,
) -> Result<PeTable> {
    cfg.validate()?;
    let gw = window_graph(g, w, opts)?;
    let sup = build_supra_laplacian(&gw, &supra_options(opts))?;
    if sup.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let block = solve_block(&sup.matrix, cfg, approx, opts, false)?;
    let mut meta = PeMeta {
        include_eigenvalues: opts.include_eigenvalues,
        solver: Some(cfg.clone()),
        not_converged: !block.converged,
        warnings: block.notes.clone(),
        ..Default::default()
    };
    if !block.converged {
        let msg = "supra-Laplacian eigensolve did not converge".to_string();
        warn!("{msg}");
        meta.warnings.push(msg);
    }
    let mut entries = BTreeMap::new();
    scatter(&mut entries, &sup, &block, w, opts);
    Ok(PeTable {
        header: PeHeader {
            variant: Variant {
                kind: PeKind::Slpe,
                approx,
            },
            k: cfg.k,
            width: width(cfg, approx, opts),
            window: w,
            seed: cfg.seed,
        },
        entries,
        meta,
    })
}

/// Per-layer Laplacian encodings: each snapshot of the window is solved on
/// its own (in parallel), with its own solver and sign seeds. Layers with
/// fewer than `k` usable eigenpairs are zero-padded and listed in
/// `meta.padded_layers`.
pub fn compute_lpe(
    g: &TemporalGraph,
    w: Window,
    cfg: &SolverConfig,
    approx: Approx,
    opts: &PeOptions,
) -> Result<PeTable> {
    cfg.validate()?;
    let gw = window_graph(g, w, opts)?;
    let layers = layer_laplacians(&gw, &supra_options(opts))?;
    if layers.iter().all(SupraMatrix::is_empty) {
        return Err(Error::EmptyMatrix);
    }
    let blocks = layers
        .par_iter()
        .enumerate()
        .map(|(t, l)| {
            if l.is_empty() {
                return Ok(None);
            }
            let layer_cfg = SolverConfig {
                seed: derive_seed(cfg.seed, (w.start + t) as u64),
                ..cfg.clone()
            };
            solve_block(&l.matrix, &layer_cfg, approx, opts, true).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut meta = PeMeta {
        include_eigenvalues: opts.include_eigenvalues,
        solver: Some(cfg.clone()),
        ..Default::default()
    };
    let mut entries = BTreeMap::new();
    for (t, (l, block)) in layers.iter().zip(&blocks).enumerate() {
        let Some(block) = block else { continue };
        if block.padded {
            meta.padded_layers.push(w.start + t);
        }
        if !block.converged {
            meta.not_converged = true;
            meta.warnings
                .push(format!("layer {} eigensolve did not converge", w.start + t));
        }
        meta.warnings.extend(
            block
                .notes
                .iter()
                .map(|n| format!("layer {}: {n}", w.start + t)),
        );
        scatter(&mut entries, l, block, w, opts);
    }
    if meta.not_converged {
        warn!("some layer eigensolves did not converge");
    }
    Ok(PeTable {
        header: PeHeader {
            variant: Variant {
                kind: PeKind::Lpe,
                approx,
            },
            k: cfg.k,
            width: width(cfg, approx, opts),
            window: w,
            seed: cfg.seed,
        },
        entries,
        meta,
    })
}

/// Concatenates node features with the table's encodings at time `t`,
/// features first. Nodes without an encoding get zeros when `pad_missing`
/// is set and are left out otherwise.
pub fn concat_features(
    features: &BTreeMap<NodeId, Vec<f64>>,
    pe: &PeTable,
    t: usize,
    pad_missing: bool,
) -> Result<BTreeMap<NodeId, Vec<f64>>> {
    let mut widths = features.values().map(Vec::len);
    if let Some(d) = widths.next() {
        if let Some(bad) = widths.find(|&w| w != d) {
            return Err(Error::Shape(format!("feature widths {d} and {bad} differ")));
        }
    }
    for (&(pt, node), _) in pe.entries.range((t, 0)..(t + 1, 0)) {
        debug_assert_eq!(pt, t);
        if !features.contains_key(&node) {
            return Err(Error::MissingFeature(node));
        }
    }
    let c = pe.width();
    Ok(features
        .iter()
        .filter_map(|(&node, f)| {
            let tail = match pe.get(t, node) {
                Some(p) => p.to_vec(),
                None if pad_missing => vec![0.0; c],
                None => return None,
            };
            let mut out = f.clone();
            out.extend(tail);
            Some((node, out))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_layer_edge() -> TemporalGraph {
        TemporalGraph::from_layers(2, &[vec![(0, 1)], vec![(0, 1)]]).unwrap()
    }

    fn plain() -> PeOptions {
        PeOptions {
            global_nodes: false,
            ..Default::default()
        }
    }

    #[test]
    fn variant_names() {
        for s in ["slpe-e", "slpe-i", "slpe-t", "lpe-e", "lpe-i", "lpe-t"] {
            assert_eq!(s.parse::<Variant>().unwrap().to_string(), s);
        }
        assert!("slpe".parse::<Variant>().is_err());
        assert!("spe-e".parse::<Variant>().is_err());
    }

    #[test]
    fn two_layer_kernel_is_constant() {
        let pe = compute_slpe(
            &two_layer_edge(),
            Window::full(2),
            &SolverConfig::exact(1).with_seed(3),
            Approx::Exact,
            &plain(),
        )
        .unwrap();
        assert_eq!(pe.len(), 4);
        let first = pe.get(0, 0).unwrap()[0];
        assert!((first.abs() - 0.5).abs() < 1e-10);
        for (_, v) in pe.entries() {
            assert!((v[0] - first).abs() < 1e-10);
        }
    }

    #[test]
    fn inactive_nodes_are_absent_and_global_rows_dropped() {
        let g =
            TemporalGraph::from_layers(4, &[vec![(0, 1), (1, 2)], vec![(0, 1), (2, 3)]]).unwrap();
        let cfg = SolverConfig::exact(2);
        let pe = compute_slpe(
            &g,
            Window::full(2),
            &cfg,
            Approx::Exact,
            &PeOptions::default(),
        )
        .unwrap();
        assert!(pe.get(0, 3).is_none());
        assert!(pe.get(1, 3).is_some());
        assert!(pe.get(0, 4).is_none()); // global node of layer 0
        assert_eq!(pe.len(), 3 + 4);
        let keep = PeOptions {
            keep_global: true,
            ..Default::default()
        };
        let pe = compute_slpe(&g, Window::full(2), &cfg, Approx::Exact, &keep).unwrap();
        assert!(pe.get(0, 4).is_some() && pe.get(1, 5).is_some());
    }

    #[test]
    fn trajectory_width() {
        let layers: Vec<Vec<(usize, usize)>> = (0..3)
            .map(|t| (0..30).map(|i| (i, (i + 1 + t) % 30)).collect())
            .collect();
        let g = TemporalGraph::from_layers(30, &layers).unwrap();
        let cfg = SolverConfig::inexact(2).with_maxiter(4);
        let pe = compute_slpe(
            &g,
            Window::full(3),
            &cfg,
            Approx::Trajectory,
            &PeOptions::default(),
        )
        .unwrap();
        assert_eq!(pe.width(), 8);
        assert!(pe.entries().all(|(_, v)| v.len() == 8));
        let with_vals = PeOptions {
            include_eigenvalues: true,
            ..Default::default()
        };
        let pe = compute_slpe(&g, Window::full(3), &cfg, Approx::Trajectory, &with_vals).unwrap();
        assert_eq!(pe.width(), 16);
    }

    #[test]
    fn lpe_pads_small_layers() {
        let g = TemporalGraph::from_layers(
            10,
            &[vec![(0, 1), (1, 2)], (0..9).map(|i| (i, i + 1)).collect()],
        )
        .unwrap();
        let cfg = SolverConfig::exact(8);
        let pe = compute_lpe(&g, Window::full(2), &cfg, Approx::Exact, &plain()).unwrap();
        assert_eq!(pe.meta.padded_layers, vec![0]);
        let v = pe.get(0, 1).unwrap();
        assert_eq!(v.len(), 8);
        assert!(v[3..].iter().all(|&x| x == 0.0));
        assert!(v[..3].iter().any(|&x| x != 0.0));
    }

    #[test]
    fn drop_trivial_skips_the_kernel() {
        let g = TemporalGraph::from_layers(6, &[(0..5).map(|i| (i, i + 1)).collect()]).unwrap();
        let opts = PeOptions {
            drop_trivial: true,
            include_eigenvalues: true,
            ..plain()
        };
        let pe = compute_slpe(
            &g,
            Window::full(1),
            &SolverConfig::exact(2),
            Approx::Exact,
            &opts,
        )
        .unwrap();
        let v = pe.get(0, 0).unwrap();
        assert!(v[2] > 1e-3 && v[3] > v[2]);
    }

    #[test]
    fn empty_window_is_an_error() {
        let g = TemporalGraph::from_layers(3, &[vec![], vec![(0, 1)]]).unwrap();
        let r = compute_slpe(
            &g,
            Window::new(0, 1),
            &SolverConfig::exact(1),
            Approx::Exact,
            &PeOptions::default(),
        );
        assert!(matches!(r, Err(Error::EmptyMatrix)));
    }

    #[test]
    fn concat_shapes_and_errors() {
        let g = TemporalGraph::from_layers(3, &[(0..2).map(|i| (i, i + 1)).collect()]).unwrap();
        let cfg = SolverConfig::exact(3);
        let pe = compute_slpe(&g, Window::full(1), &cfg, Approx::Exact, &plain()).unwrap();
        let mut feats: BTreeMap<usize, Vec<f64>> =
            (0..3).map(|v| (v, vec![v as f64, 1.0])).collect();
        let out = concat_features(&feats, &pe, 0, false).unwrap();
        assert!(out.values().all(|v| v.len() == 5));
        assert_eq!(&out[&2][..2], &[2.0, 1.0]);

        feats.insert(7, vec![0.0, 0.0]);
        assert_eq!(concat_features(&feats, &pe, 0, false).unwrap().len(), 3);
        assert_eq!(
            concat_features(&feats, &pe, 0, true).unwrap()[&7],
            vec![0.0; 5]
        );

        let mut missing = feats.clone();
        missing.remove(&1);
        assert!(matches!(
            concat_features(&missing, &pe, 0, true),
            Err(Error::MissingFeature(1))
        ));
        feats.insert(8, vec![1.0]);
        assert!(matches!(
            concat_features(&feats, &pe, 0, true),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn concat_with_empty_table_pads() {
        let g = TemporalGraph::from_layers(3, &[vec![(0, 1)], vec![(1, 2)]]).unwrap();
        let pe = compute_slpe(
            &g,
            Window::full(2),
            &SolverConfig::exact(1),
            Approx::Exact,
            &plain(),
        )
        .unwrap();
        let feats: BTreeMap<usize, Vec<f64>> = (0..3).map(|v| (v, vec![1.0])).collect();
        // No entries exist at t = 5.
        let out = concat_features(&feats, &pe, 5, true).unwrap();
        assert!(out.values().all(|v| v == &vec![1.0, 0.0]));
    }

    #[test]
    fn file_round_trip_is_exact() {
        let g =
            TemporalGraph::from_layers(5, &[vec![(0, 1), (1, 2)], vec![(2, 3), (3, 4), (0, 4)]])
                .unwrap();
        let cfg = SolverConfig::exact(2).with_seed(17);
        let opts = PeOptions {
            include_eigenvalues: true,
            ..Default::default()
        };
        let pe = compute_slpe(&g, Window::full(2), &cfg, Approx::Exact, &opts).unwrap();
        let mut buf = Vec::new();
        pe.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("#pe variant=slpe-e k=2 c=4 window=0,2 seed=17\n"));
        let back = PeTable::read_from(&buf[..]).unwrap();
        assert_eq!(back.header, pe.header);
        assert!(back.entries().eq(pe.entries()));
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
