//! `slpe`: ingest temporal graphs, build supra matrices, compute positional
//! encodings, run the smoothness and WL checks, and time the eigensolvers.
//!
//! Exit codes: 0 success (or an inconclusive `wl-test`), 1 `wl-test`
//! distinguished the graphs, 2 usage error, 3 runtime failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::LevelFilter;
use slpe::temporal::Partitioning;
use slpe::{Method, Target, Variant, WlMode};

#[derive(Parser, Debug)]
#[command(name = "slpe", version, about, arg_required_else_help = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Inter-layer coupling weight.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub mu: f64,
    /// Number of eigenpairs.
    #[arg(long, global = true, default_value_t = 8)]
    pub k: usize,
    /// Snapshot window: `len` for the latest `len` snapshots, or `start,len`.
    #[arg(long, global = true, default_value = "3", value_parser = parse_window)]
    pub window: WindowArg,
    /// Iteration cap of the inexact and trajectory solvers.
    #[arg(long, global = true, default_value_t = 20)]
    pub maxiter: usize,
    /// Residual tolerance `||A v - lambda v||`.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    /// Encoding variant: slpe-e, slpe-i, slpe-t, lpe-e, lpe-i or lpe-t.
    #[arg(long, global = true, default_value = "slpe-e")]
    pub variant: Variant,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Info)]
    pub log: LogLevel,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogLevel {
    Quiet,
    Info,
    Debug,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowArg {
    Latest(usize),
    Range(usize, usize),
}

fn parse_window(s: &str) -> Result<WindowArg, String> {
    let num = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad window {s:?}"))
    };
    let w = match s.split_once(',') {
        Some((a, b)) => WindowArg::Range(num(a)?, num(b)?),
        None => WindowArg::Latest(num(s)?),
    };
    match w {
        WindowArg::Latest(0) | WindowArg::Range(_, 0) => Err("window length must be >= 1".into()),
        w => Ok(w),
    }
}

/// Shared edge-list input flags.
#[derive(Args, Debug, Clone)]
pub struct Input {
    /// Edge list: `src dst timestamp [weight]` per line.
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[command(flatten)]
    pub parse: ParseFlags,
}

#[derive(Args, Debug, Clone)]
pub struct ParseFlags {
    /// Snapshot rule: `distinct` timestamps or `fixed:N` equal-range buckets.
    #[arg(long, default_value = "distinct")]
    pub partition: Partitioning,
    /// Map id tokens to 0..n instead of using them verbatim.
    #[arg(long)]
    pub remap_ids: bool,
    #[arg(long)]
    pub allow_self_loops: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse an edge list and print a JSON summary; `--out` writes the
    /// normalized edge list.
    Ingest(Input),
    /// Export the supra matrix of a window.
    BuildSupra(BuildSupra),
    /// Compute a positional-encoding table for a window.
    ComputePe(ComputePe),
    /// Compare two graphs with Supra-WL or Layer-WL refinement.
    WlTest(WlTest),
    /// Check the smoothness identity and eigenvector minimality, or emit the
    /// inter-layer consistency demo CSV.
    Smoothness(Smoothness),
    /// Time the eigensolvers on Barabasi-Albert temporal graphs.
    Bench(Bench),
}

#[derive(Args, Debug)]
pub struct BuildSupra {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, value_enum, default_value_t = Kind::Laplacian)]
    pub kind: Kind,
    /// Index every universe node in every layer instead of active nodes only.
    #[arg(long)]
    pub full: bool,
    /// Use edge weights instead of unit weights.
    #[arg(long)]
    pub weights: bool,
    /// Add one global node per layer, linked to all active nodes.
    #[arg(long)]
    pub global_nodes: bool,
    /// Also write the `supra_row t node` index map here.
    #[arg(long, value_name = "FILE")]
    pub index: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Adjacency,
    Laplacian,
}

#[derive(Args, Debug)]
pub struct ComputePe {
    #[command(flatten)]
    pub input: Input,
    /// Append the eigenvalues to every row.
    #[arg(long)]
    pub eigenvalues: bool,
    /// Skip eigenpairs with eigenvalue near zero.
    #[arg(long)]
    pub drop_trivial: bool,
    /// Keep the rows of the per-layer global nodes.
    #[arg(long)]
    pub keep_global: bool,
    /// Do not add per-layer global nodes.
    #[arg(long)]
    pub no_global_nodes: bool,
    /// Use edge weights instead of unit weights.
    #[arg(long)]
    pub weights: bool,
    /// Restart-cycle cap of the exact (Lanczos) solver.
    #[arg(long, default_value_t = 5000)]
    pub lanczos_cycles: usize,
    /// Keep every n-th iterate in trajectory variants.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
}

#[derive(Args, Debug)]
pub struct WlTest {
    #[arg(long, value_name = "FILE", required_unless_present = "builtin")]
    pub g1: Option<PathBuf>,
    #[arg(long, value_name = "FILE", required_unless_present = "builtin")]
    pub g2: Option<PathBuf>,
    /// Use the built-in pair that Supra-WL separates and Layer-WL does not.
    #[arg(long, conflicts_with_all = ["g1", "g2"])]
    pub builtin: bool,
    #[arg(long, default_value = "supra")]
    pub mode: WlMode,
    #[arg(long, default_value_t = 100)]
    pub max_rounds: usize,
    #[command(flatten)]
    pub parse: ParseFlags,
}

#[derive(Args, Debug)]
pub struct Smoothness {
    /// Edge list to report on; not needed with `--demo`.
    #[arg(long = "in", value_name = "FILE", required_unless_present = "demo")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub parse: ParseFlags,
    /// Random orthonormal trials of the minimality check.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long)]
    pub weights: bool,
    /// Emit the stacked-path consistency CSV instead of a report.
    #[arg(long)]
    pub demo: bool,
    #[arg(long, default_value_t = 20)]
    pub path_length: usize,
    /// Layers of the demo.
    #[arg(long = "T", default_value_t = 3)]
    pub layers: usize,
    /// Eigenvector column written to the demo CSV.
    #[arg(long, default_value_t = 1)]
    pub column: usize,
    /// Per-layer signs of the uncoupled demo solutions.
    #[arg(long, value_enum, default_value_t = Signs::Random)]
    pub signs: Signs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Signs {
    Aligned,
    Alternating,
    Random,
}

#[derive(Args, Debug)]
pub struct Bench {
    /// Active nodes per layer, ascending.
    #[arg(long, default_value = "1000,5000,20000,50000", value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long, default_value = "lanczos,lobpcg", value_delimiter = ',')]
    pub solvers: Vec<Method>,
    #[arg(long, default_value = "supra")]
    pub target: Target,
    /// Layers per supra instance.
    #[arg(long = "T", default_value_t = 3)]
    pub layers: usize,
    /// Preferential-attachment edges per new node.
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Check eigenvalues against the dense solver where it fits.
    #[arg(long)]
    pub verify: bool,
    /// Also write the per-size lobpcg/lanczos speedup CSV here.
    #[arg(long, value_name = "FILE")]
    pub speedup: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 2) as u8);
        }
    };
    let level = match cli.global.log {
        LogLevel::Quiet => LevelFilter::Error,
        LogLevel::Info => LevelFilter::Info,
        LogLevel::Debug => LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
