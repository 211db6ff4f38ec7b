use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde_json::json;
use slpe::eigen::{dense_reference_with_budget, DENSE_BUDGET};
use slpe::smoothness::{evaluate_graph, inter_layer_consistency_demo, SignPolicy};
use slpe::supra::{add_global_nodes, build_supra_adjacency, build_supra_laplacian};
use slpe::temporal::{ingest_edge_list, write_edge_list, IngestOptions, Ingested};
use slpe::wl::Verdict;
use slpe::{
    check_minimality, compute_lpe, compute_slpe, distinguish, generate_counterexample, run_bench,
    Approx, BenchSpec, Error, PeKind, PeOptions, SolverConfig, SupraOptions, TemporalGraph, Window,
    WlConfig,
};

use crate::{
    Bench, BuildSupra, Cli, Command, ComputePe, Global, Input, Kind, ParseFlags, Signs, Smoothness,
    WindowArg, WlTest,
};

pub enum CliError {
    /// Flag values that fail validation; exit code 2.
    Usage(String),
    /// Failures after validation; exit code 3.
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::WindowOutOfRange { .. } => {
                CliError::Usage(e.to_string())
            }
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Usage(msg.into()))
}

pub fn run(cli: &Cli) -> Result<u8> {
    validate(&cli.global)?;
    let g = &cli.global;
    match &cli.command {
        Command::Ingest(a) => ingest(g, a).map(|_| 0),
        Command::BuildSupra(a) => build_supra(g, a).map(|_| 0),
        Command::ComputePe(a) => compute_pe(g, a).map(|_| 0),
        Command::WlTest(a) => wl_test(g, a),
        Command::Smoothness(a) => smoothness(g, a).map(|_| 0),
        Command::Bench(a) => bench(g, a).map(|_| 0),
    }
}

fn validate(g: &Global) -> Result<()> {
    if !(g.mu >= 0.0 && g.mu.is_finite()) {
        return usage(format!("--mu must be finite and >= 0, got {}", g.mu));
    }
    if g.k == 0 {
        return usage("--k must be >= 1");
    }
    if g.maxiter == 0 {
        return usage("--maxiter must be >= 1");
    }
    if g.tol.is_nan() || g.tol <= 0.0 {
        return usage(format!("--tol must be > 0, got {}", g.tol));
    }
    Ok(())
}

/// Buffered output file, or stdout.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Runtime(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(path: &Path, flags: &ParseFlags) -> Result<Ingested> {
    let opts = IngestOptions {
        partitioning: flags.partition,
        allow_self_loops: flags.allow_self_loops,
        remap_ids: flags.remap_ids,
    };
    let ingested = ingest_edge_list(path, &opts)?;
    info!(
        "loaded {}: {} snapshots, {} nodes, {} edges",
        path.display(),
        ingested.graph.num_snapshots(),
        ingested.graph.universe_size(),
        ingested.graph.num_edges()
    );
    Ok(ingested)
}

fn window(arg: WindowArg, g: &TemporalGraph) -> Result<Window> {
    let w = match arg {
        WindowArg::Latest(len) => Window::latest(g.num_snapshots(), len),
        WindowArg::Range(start, len) => Window::new(start, len),
    };
    w.check(g.num_snapshots())?;
    Ok(w)
}

fn ingest(g: &Global, a: &Input) -> Result<()> {
    let ing = load(&a.input, &a.parse)?;
    let graph = &ing.graph;
    let summary = json!({
        "name": graph.meta.name,
        "nodes": graph.universe_size(),
        "active_nodes": ing.stats.distinct_nodes,
        "snapshots": graph.num_snapshots(),
        "edges": graph.num_edges(),
        "records": ing.stats.records,
        "reversed_pairs": ing.stats.reversed_pairs,
        "partition": a.parse.partition.to_string(),
    });
    println!("{summary}");
    if let Some(path) = &g.out {
        let mut w = output(Some(path))?;
        write_edge_list(graph, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn build_supra(g: &Global, a: &BuildSupra) -> Result<()> {
    let graph = load(&a.input.input, &a.input.parse)?.graph;
    let mut gw = graph.slice(window(g.window, &graph)?)?;
    if a.global_nodes {
        gw = add_global_nodes(&gw)?;
    }
    let opts = SupraOptions {
        mu: g.mu,
        reduced: !a.full,
        use_weights: a.weights,
    };
    let sup = match a.kind {
        Kind::Adjacency => build_supra_adjacency(&gw, &opts)?,
        Kind::Laplacian => build_supra_laplacian(&gw, &opts)?,
    };
    info!(
        "supra {}: {} rows, {} nonzeros",
        sup.kind.as_str(),
        sup.rows(),
        sup.nnz()
    );
    let mut w = output(g.out.as_deref())?;
    sup.write_to(&mut w)?;
    w.flush()?;
    if let Some(path) = &a.index {
        let mut w = output(Some(path))?;
        sup.write_index_map(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn compute_pe(g: &Global, a: &ComputePe) -> Result<()> {
    if a.stride == 0 {
        return usage("--stride must be >= 1");
    }
    let graph = load(&a.input.input, &a.input.parse)?.graph;
    let w = window(g.window, &graph)?;
    let approx = g.variant.approx;
    let mut cfg = match approx {
        Approx::Exact => SolverConfig::exact(g.k).with_maxiter(a.lanczos_cycles),
        Approx::Inexact | Approx::Trajectory => SolverConfig::inexact(g.k).with_maxiter(g.maxiter),
    }
    .with_seed(g.seed)
    .with_tol(g.tol);
    cfg.trajectory_stride = a.stride;
    let opts = PeOptions {
        mu: g.mu,
        include_eigenvalues: a.eigenvalues,
        drop_trivial: a.drop_trivial,
        keep_global: a.keep_global,
        global_nodes: !a.no_global_nodes,
        use_weights: a.weights,
    };
    let table = match g.variant.kind {
        PeKind::Slpe => compute_slpe(&graph, w, &cfg, approx, &opts)?,
        PeKind::Lpe => compute_lpe(&graph, w, &cfg, approx, &opts)?,
    };
    for note in &table.meta.warnings {
        warn!("{note}");
    }
    info!(
        "{}: {} rows of width {}",
        g.variant,
        table.len(),
        table.width()
    );
    let mut out = output(g.out.as_deref())?;
    table.write_to(&mut out)?;
    out.flush()?;
    Ok(())
}

fn wl_test(g: &Global, a: &WlTest) -> Result<u8> {
    let (g1, g2) = if a.builtin {
        generate_counterexample()
    } else {
        let path = |p: &Option<PathBuf>| -> Result<PathBuf> {
            p.clone()
                .map_or_else(|| usage("--g1 and --g2 are required"), Ok)
        };
        (
            load(&path(&a.g1)?, &a.parse)?.graph,
            load(&path(&a.g2)?, &a.parse)?.graph,
        )
    };
    let cfg = WlConfig::new(a.mode).with_max_rounds(a.max_rounds);
    let d = distinguish(&g1, &g2, &cfg);
    info!("{:?} after round {}", d.verdict, d.round);
    let mut out = output(g.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &d).map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(match d.verdict {
        Verdict::Distinguished => 1,
        Verdict::Inconclusive => 0,
    })
}

fn smoothness(g: &Global, a: &Smoothness) -> Result<()> {
    if a.demo {
        let signs = match a.signs {
            Signs::Aligned => SignPolicy::Aligned,
            Signs::Alternating => SignPolicy::Alternating,
            Signs::Random => SignPolicy::Random(g.seed),
        };
        let demo =
            inter_layer_consistency_demo(a.path_length, a.layers, g.mu, g.k, a.column, signs)?;
        info!(
            "inter-layer sum: coupled {:.6e}, uncoupled {:.6e}",
            demo.coupled_inter, demo.uncoupled_inter
        );
        let mut out = output(g.out.as_deref())?;
        demo.write_csv(&mut out)?;
        out.flush()?;
        return Ok(());
    }
    let Some(path) = &a.input else {
        return usage("--in is required without --demo");
    };
    let graph = load(path, &a.parse)?.graph;
    let gw = graph.slice(window(g.window, &graph)?)?;
    let opts = SupraOptions {
        mu: g.mu,
        reduced: false,
        use_weights: a.weights,
    };
    let sup = build_supra_laplacian(&gw, &opts)?;
    if g.k > sup.rows() {
        return usage(format!("--k {} exceeds the {} supra rows", g.k, sup.rows()));
    }
    let eig = dense_reference_with_budget(&sup.matrix, g.k, DENSE_BUDGET)?;
    let report = evaluate_graph(&gw, &eig.vectors, g.mu, a.weights)?;
    let min = check_minimality(&sup.matrix, g.k, a.trials, g.seed)?;
    let summary = json!({
        "rows": sup.rows(),
        "k": g.k,
        "mu": g.mu,
        "eigenvalue_sum": eig.values.iter().sum::<f64>(),
        "intra": report.intra,
        "inter": report.inter,
        "total": report.total,
        "quad_form": report.quad_form,
        "identity_gap": report.identity_gap,
        "minimality": {
            "trials": min.trials,
            "optimum": min.optimum,
            "min_trial": min.min_trial,
            "median_trial": min.median_trial,
            "violations": min.violations,
        },
    });
    let mut out = output(g.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &summary)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn bench(g: &Global, a: &Bench) -> Result<()> {
    let base = BenchSpec::default();
    let spec = BenchSpec {
        sizes: a.sizes.clone(),
        ba_m: a.m,
        layers: a.layers,
        k: g.k,
        mu: g.mu,
        repeats: a.repeats,
        solvers: a.solvers.clone(),
        lanczos: base.lanczos.clone().with_tol(g.tol),
        lobpcg: base.lobpcg.clone().with_tol(g.tol).with_maxiter(g.maxiter),
        seed: g.seed,
        verify: a.verify,
        ..base
    };
    spec.validate()?;
    let report = run_bench(&spec, a.target)?;
    for row in &report.rows {
        match (row.median_ms, row.residual_max) {
            (Some(ms), Some(res)) => info!(
                "{} @ {}: median {ms:.1} ms, residual {res:.2e}",
                row.solver.as_str(),
                row.size
            ),
            _ => warn!(
                "{} @ {}: {}",
                row.solver.as_str(),
                row.size,
                row.note.as_deref().unwrap_or("failed")
            ),
        }
    }
    for (size, ratio) in report.speedups() {
        info!("speedup lobpcg vs lanczos @ {size}: {ratio:.2}x");
    }
    let mut out = output(g.out.as_deref())?;
    report.write_csv(&mut out)?;
    out.flush()?;
    if let Some(path) = &a.speedup {
        let mut w = output(Some(path))?;
        report.write_speedup_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}
