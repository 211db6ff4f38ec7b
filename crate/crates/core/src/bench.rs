//! Synthetic temporal graphs and solver timing sweeps.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use log::{info, warn};
use rand::Rng;
use serde::Serialize;

use crate::eigen::{
    dense_reference_with_budget, lanczos, lobpcg, rng_from, EigenResult, Method, SolverConfig,
    DENSE_BUDGET,
};
use crate::encodings::derive_seed;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::supra::{build_supra_laplacian, SupraOptions};
use crate::temporal::{NodeId, TemporalGraph};

/// One Barabási–Albert graph: a clique on the first `m` nodes, then every
/// further node attaches to `m` distinct earlier nodes chosen with
/// probability proportional to degree (uniformly while all degrees are 0).
/// Yields `m(m-1)/2 + (n-m)m` edges.
pub fn barabasi_albert_edges(n: usize, m: usize, seed: u64) -> Result<Vec<(NodeId, NodeId)>> {
    if m == 0 || n <= m {
        return Err(Error::InvalidArgument(format!(
            "Barabasi-Albert needs n > m >= 1, got n={n}, m={m}"
        )));
    }
    let mut rng = rng_from(seed);
    let mut edges = Vec::with_capacity(m * (m - 1) / 2 + (n - m) * m);
    // Every edge endpoint once, so uniform draws are degree-proportional.
    let mut ends: Vec<NodeId> = Vec::with_capacity(2 * edges.capacity());
    for u in 0..m {
        for v in u + 1..m {
            edges.push((u, v));
            ends.extend([u, v]);
        }
    }
    let mut targets = BTreeSet::new();
    for v in m..n {
        targets.clear();
        while targets.len() < m {
            let t = if ends.is_empty() {
                rng.random_range(0..v)
            } else {
                ends[rng.random_range(0..ends.len())]
            };
            targets.insert(t);
        }
        for &t in &targets {
            edges.push((t, v));
            ends.extend([t, v]);
        }
    }
    Ok(edges)
}

/// `layers` independent Barabási–Albert graphs on the same `n` nodes.
pub fn generate_ba_temporal(n: usize, m: usize, layers: usize, seed: u64) -> Result<TemporalGraph> {
    let layers = (0..layers)
        .map(|t| barabasi_albert_edges(n, m, derive_seed(seed, t as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TemporalGraph::from_layers(n, &layers)?.with_name(format!("ba-n{n}-m{m}")))
}

/// Independent Erdős–Rényi layers: each pair is an edge with probability `p`.
pub fn random_temporal_graph(n: usize, layers: usize, p: f64, seed: u64) -> Result<TemporalGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "edge probability {p} outside [0, 1]"
        )));
    }
    let mut rng = rng_from(seed);
    let layers: Vec<Vec<(NodeId, NodeId)>> = (0..layers)
        .map(|_| {
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random_bool(p) {
                        edges.push((u, v));
                    }
                }
            }
            edges
        })
        .collect();
    TemporalGraph::from_layers(n, &layers)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// Supra-Laplacian over all layers.
    Supra,
    /// Laplacian of one layer.
    SingleLayer,
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "supra" => Ok(Target::Supra),
            "single-layer" | "single" | "layer" => Ok(Target::SingleLayer),
            _ => Err(Error::InvalidArgument(format!(
                "unknown bench target {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchSpec {
    /// Active nodes per layer, ascending.
    pub sizes: Vec<usize>,
    pub ba_m: usize,
    pub layers: usize,
    pub k: usize,
    pub mu: f64,
    pub repeats: usize,
    pub solvers: Vec<Method>,
    pub lanczos: SolverConfig,
    pub lobpcg: SolverConfig,
    pub dense_budget: usize,
    pub seed: u64,
    /// Compare eigenvalues against the dense solver where it fits the budget.
    pub verify: bool,
}

impl Default for BenchSpec {
    fn default() -> Self {
        let k = 8;
        let mut lanczos = SolverConfig::exact(k);
        // Measure plain converged Lanczos.
        lanczos.lanczos_deflation_check = false;
        BenchSpec {
            sizes: vec![1000, 5000, 20000, 50000],
            ba_m: 3,
            layers: 3,
            k,
            mu: 1.0,
            repeats: 5,
            solvers: vec![Method::Lanczos, Method::Lobpcg],
            lanczos,
            lobpcg: SolverConfig::inexact(k),
            dense_budget: DENSE_BUDGET,
            seed: 0,
            verify: false,
        }
    }
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty()
            || self.sizes.windows(2).any(|w| w[0] >= w[1])
            || self.sizes[0] == 0
        {
            return Err(Error::InvalidArgument(
                "sizes must be positive and ascending".into(),
            ));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidArgument("repeats must be >= 1".into()));
        }
        if self.layers == 0 {
            return Err(Error::InvalidArgument("layers must be >= 1".into()));
        }
        Ok(())
    }

    fn config(&self, method: Method) -> SolverConfig {
        let base = match method {
            Method::Lobpcg => &self.lobpcg,
            _ => &self.lanczos,
        };
        SolverConfig {
            k: self.k,
            seed: self.seed,
            ..base.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub size: usize,
    /// Dimension of the solved matrix.
    pub rows: usize,
    pub solver: Method,
    pub median_ms: Option<f64>,
    pub min_ms: Option<f64>,
    pub max_ms: Option<f64>,
    pub residual_max: Option<f64>,
    pub converged: bool,
    /// Largest eigenvalue deviation from the dense solver, when verified.
    pub oracle_gap: Option<f64>,
    /// Why the row has no timings.
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub target: Target,
    pub rows: Vec<BenchRow>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn solve(m: &CsrMatrix, method: Method, cfg: &SolverConfig, budget: usize) -> Result<EigenResult> {
    match method {
        Method::Dense => dense_reference_with_budget(m, cfg.k, budget),
        Method::Lanczos => lanczos(m, cfg),
        Method::Lobpcg => lobpcg(m, cfg),
    }
}

fn bench_one(spec: &BenchSpec, size: usize, m: &CsrMatrix, method: Method) -> BenchRow {
    let mut row = BenchRow {
        size,
        rows: m.dim(),
        solver: method,
        median_ms: None,
        min_ms: None,
        max_ms: None,
        residual_max: None,
        converged: false,
        oracle_gap: None,
        note: None,
    };
    if method == Method::Dense && m.dim() > spec.dense_budget {
        row.note = Some(format!(
            "dense budget ({} rows > {})",
            m.dim(),
            spec.dense_budget
        ));
        warn!(
            "size {size}: dense solver refused: {}",
            row.note.as_deref().unwrap_or_default()
        );
        return row;
    }
    let cfg = spec.config(method);
    // Warm-up.
    if let Err(e) = solve(m, method, &cfg, spec.dense_budget) {
        row.note = Some(e.to_string());
        warn!("size {size}: {} failed: {e}", method.as_str());
        return row;
    }
    let mut times = Vec::with_capacity(spec.repeats);
    let mut last = None;
    for _ in 0..spec.repeats {
        let start = Instant::now();
        let result = solve(m, method, &cfg, spec.dense_budget);
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        match result {
            Ok(r) => {
                times.push(elapsed);
                row.residual_max = Some(row.residual_max.unwrap_or(0.0).max(r.max_residual()));
                last = Some(r);
            }
            Err(e) => {
                row.note = Some(e.to_string());
                warn!("size {size}: {} failed: {e}", method.as_str());
                return row;
            }
        }
    }
    times.sort_by(f64::total_cmp);
    row.median_ms = Some(median(&times));
    row.min_ms = times.first().copied();
    row.max_ms = times.last().copied();
    let last = last.expect("at least one repeat");
    row.converged = last.converged;
    if spec.verify && method != Method::Dense && m.dim() <= spec.dense_budget {
        if let Ok(d) = dense_reference_with_budget(m, spec.k, spec.dense_budget) {
            row.oracle_gap = Some(
                last.values
                    .iter()
                    .zip(&d.values)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );
        }
    }
    info!(
        "size {size} ({} rows) {}: median {:.2} ms, residual {:.2e}",
        m.dim(),
        method.as_str(),
        row.median_ms.unwrap_or(f64::NAN),
        row.residual_max.unwrap_or(f64::NAN)
    );
    row
}

/// Times every solver of `spec` on a Barabási–Albert instance per size.
/// Matrix assembly is excluded from the timings. Failures become rows
/// without timings; they never stop the sweep.
pub fn run_bench(spec: &BenchSpec, target: Target) -> Result<BenchReport> {
    spec.validate()?;
    let layers = match target {
        Target::Supra => spec.layers,
        Target::SingleLayer => 1,
    };
    let opts = SupraOptions {
        mu: spec.mu,
        ..SupraOptions::default()
    };
    let mut rows = Vec::new();
    for &size in &spec.sizes {
        let built =
            generate_ba_temporal(size, spec.ba_m, layers, derive_seed(spec.seed, size as u64))
                .and_then(|g| build_supra_laplacian(&g, &opts));
        let m = match built {
            Ok(m) => m.matrix,
            Err(e) => {
                warn!("size {size}: could not build the matrix: {e}");
                rows.extend(spec.solvers.iter().map(|&solver| BenchRow {
                    size,
                    rows: 0,
                    solver,
                    median_ms: None,
                    min_ms: None,
                    max_ms: None,
                    residual_max: None,
                    converged: false,
                    oracle_gap: None,
                    note: Some(e.to_string()),
                }));
                continue;
            }
        };
        for &method in &spec.solvers {
            rows.push(bench_one(spec, size, &m, method));
        }
    }
    Ok(BenchReport { target, rows })
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map(|x| format!("{x:.prec$}")).unwrap_or_default()
}

impl BenchReport {
    pub fn row(&self, size: usize, solver: Method) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.size == size && r.solver == solver)
    }

    /// Lanczos median over LOBPCG median, per size with both timings.
    pub fn speedups(&self) -> Vec<(usize, f64)> {
        let mut sizes: Vec<usize> = self.rows.iter().map(|r| r.size).collect();
        sizes.dedup();
        sizes
            .into_iter()
            .filter_map(|s| {
                let lz = self.row(s, Method::Lanczos)?.median_ms?;
                let lo = self.row(s, Method::Lobpcg)?.median_ms?;
                Some((s, lz / lo))
            })
            .collect()
    }

    /// `size,solver,median_ms,min_ms,max_ms,residual_max,converged`; refused
    /// or failed rows leave the numeric fields empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "size,solver,median_ms,min_ms,max_ms,residual_max,converged"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.size,
                r.solver.as_str(),
                opt(r.median_ms, 3),
                opt(r.min_ms, 3),
                opt(r.max_ms, 3),
                r.residual_max
                    .map(|x| format!("{x:.3e}"))
                    .unwrap_or_default(),
                r.converged
            )?;
        }
        Ok(())
    }

    /// `size,lanczos_ms,lobpcg_ms,speedup` for plotting.
    pub fn write_speedup_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "size,lanczos_ms,lobpcg_ms,speedup")?;
        for (size, ratio) in self.speedups() {
            let lz = self.row(size, Method::Lanczos).and_then(|r| r.median_ms);
            let lo = self.row(size, Method::Lobpcg).and_then(|r| r.median_ms);
            writeln!(w, "{size},{},{},{ratio:.3}", opt(lz, 3), opt(lo, 3))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ba_tree_for_m_one() {
        let e = barabasi_albert_edges(5, 1, 3).unwrap();
        assert_eq!(e.len(), 4);
        let g = TemporalGraph::from_layers(5, &[e]).unwrap();
        let l = build_supra_laplacian(&g, &SupraOptions::default()).unwrap();
        assert_eq!(l.matrix.connected_components(), 1);
    }

    #[test]
    fn ba_edge_count() {
        assert_eq!(barabasi_albert_edges(100, 3, 1).unwrap().len(), 294);
        let g = generate_ba_temporal(100, 3, 2, 9).unwrap();
        assert!(g
            .snapshots()
            .iter()
            .all(|s| s.num_edges() == 294 && s.active_nodes().len() == 100));
        assert_ne!(g.snapshot(0).edges(), g.snapshot(1).edges());
    }

    #[test]
    fn ba_is_deterministic_and_rejects_bad_parameters() {
        assert_eq!(
            generate_ba_temporal(50, 2, 3, 4).unwrap(),
            generate_ba_temporal(50, 2, 3, 4).unwrap()
        );
        assert!(barabasi_albert_edges(3, 3, 0).is_err());
        assert!(barabasi_albert_edges(3, 0, 0).is_err());
    }

    #[test]
    fn small_sweep_rows() {
        let spec = BenchSpec {
            sizes: vec![300],
            repeats: 2,
            verify: true,
            ..Default::default()
        };
        let r = run_bench(&spec, Target::Supra).unwrap();
        assert_eq!(r.rows.len(), 2);
        for row in &r.rows {
            assert!(row.median_ms.unwrap() > 0.0);
            assert_eq!(row.rows, 900);
            assert!(row.residual_max.is_some());
        }
        let lz = r.row(300, Method::Lanczos).unwrap();
        assert!(lz.converged && lz.oracle_gap.unwrap() < 1e-8);
        assert_eq!(r.speedups().len(), 1);
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn dense_refused_above_budget() {
        let spec = BenchSpec {
            sizes: vec![100],
            repeats: 1,
            solvers: vec![Method::Dense],
            dense_budget: 50,
            ..Default::default()
        };
        let r = run_bench(&spec, Target::SingleLayer).unwrap();
        let row = &r.rows[0];
        assert!(row.median_ms.is_none() && !row.converged);
        assert!(row.note.as_deref().unwrap().starts_with("dense budget"));
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv)
            .unwrap()
            .ends_with("100,dense,,,,,false\n"));
    }

    #[test]
    fn spec_validation() {
        let bad = BenchSpec {
            sizes: vec![10, 5],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = BenchSpec {
            repeats: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn random_graph_density() {
        let g = random_temporal_graph(10, 2, 1.0, 0).unwrap();
        assert!(g.snapshots().iter().all(|s| s.num_edges() == 45));
        assert_eq!(random_temporal_graph(10, 1, 0.0, 0).unwrap().num_edges(), 0);
        assert!(random_temporal_graph(3, 1, 1.5, 0).is_err());
    }
}
