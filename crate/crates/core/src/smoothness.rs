//! The temporal smoothness objective
//! `sum_t tr(X_tᵀ L_t X_t) + mu * sum_t ||X_t - X_{t-1}||²_F`
//! and its equality with the supra-Laplacian quadratic form `tr(Xᵀ L X)`.
//!
//! Everything here uses full indexing: every layer has the same node set and
//! every node is coupled to itself in adjacent layers.

use std::io::Write;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::eigen::{dense_reference_with_budget, rng_from, DENSE_BUDGET};
use crate::encodings::derive_seed;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::supra::{build_supra_laplacian, layer_laplacians, SupraOptions};
use crate::temporal::TemporalGraph;

/// Objective trials may undercut the eigenvector optimum by this much before
/// they count as violations.
pub const MINIMALITY_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothnessReport {
    /// `tr(X_tᵀ L_t X_t)` per layer.
    pub intra: Vec<f64>,
    /// `mu * ||X_t - X_{t-1}||²_F` per transition `t-1 -> t`.
    pub inter: Vec<f64>,
    pub total: f64,
    pub quad_form: f64,
    pub identity_gap: f64,
}

/// `tr(Xᵀ M X)`.
pub fn quadratic_form(m: &CsrMatrix, x: &DMatrix<f64>) -> f64 {
    m.mul_dense(x).dot(x)
}

/// Supra-Laplacian of `layers` with every node coupled to its copies in
/// adjacent layers: diagonal blocks `L_t + d_t * mu * I` (`d_t` = number of
/// adjacent layers), off-diagonal blocks `-mu * I`.
pub fn full_supra_laplacian(layers: &[CsrMatrix], mu: f64) -> Result<CsrMatrix> {
    let n = common_dim(layers)?;
    let count = layers.len();
    let mut trip = Vec::new();
    for (t, l) in layers.iter().enumerate() {
        let off = t * n;
        trip.extend(l.triplets().map(|(i, j, v)| (off + i, off + j, v)));
        let adjacent = usize::from(t > 0) + usize::from(t + 1 < count);
        for v in 0..n {
            if adjacent > 0 && mu != 0.0 {
                trip.push((off + v, off + v, adjacent as f64 * mu));
            }
            if t + 1 < count && mu != 0.0 {
                trip.push((off + v, off + n + v, -mu));
                trip.push((off + n + v, off + v, -mu));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n * count, trip))
}

fn common_dim(layers: &[CsrMatrix]) -> Result<usize> {
    let n = layers
        .first()
        .ok_or_else(|| Error::Shape("no layers".into()))?
        .dim();
    if let Some(l) = layers.iter().find(|l| l.dim() != n) {
        return Err(Error::Shape(format!(
            "layer sizes {n} and {} differ",
            l.dim()
        )));
    }
    Ok(n)
}

/// Stacks per-layer blocks into one `(T * n) x k` matrix.
pub fn stack_blocks(blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::Shape("no blocks".into()))?;
    let (n, k) = first.shape();
    if let Some(b) = blocks.iter().find(|b| b.shape() != (n, k)) {
        return Err(Error::Shape(format!(
            "block shapes {n}x{k} and {}x{} differ",
            b.nrows(),
            b.ncols()
        )));
    }
    let mut out = DMatrix::zeros(n * blocks.len(), k);
    for (t, b) in blocks.iter().enumerate() {
        out.rows_mut(t * n, n).copy_from(b);
    }
    Ok(out)
}

/// Splits a `(T * n) x k` matrix into `T` blocks of `n` rows.
pub fn split_blocks(x: &DMatrix<f64>, layers: usize) -> Result<Vec<DMatrix<f64>>> {
    if layers == 0 || !x.nrows().is_multiple_of(layers) {
        return Err(Error::Shape(format!(
            "{} rows do not split into {layers} layers",
            x.nrows()
        )));
    }
    let n = x.nrows() / layers;
    Ok((0..layers).map(|t| x.rows(t * n, n).into_owned()).collect())
}

/// Evaluates the objective term by term, and the quadratic form against
/// [`full_supra_laplacian`].
pub fn evaluate_objective(
    layers: &[CsrMatrix],
    x_blocks: &[DMatrix<f64>],
    mu: f64,
) -> Result<SmoothnessReport> {
    let supra = full_supra_laplacian(layers, mu)?;
    evaluate_against(layers, x_blocks, mu, &supra)
}

/// Like [`evaluate_objective`] for the layers of `g` over its whole node
/// universe, with the quadratic form taken against the supra-Laplacian
/// assembled by [`build_supra_laplacian`] in full mode. `x` is `(T * n) x k`
/// in layer-major order.
pub fn evaluate_graph(
    g: &TemporalGraph,
    x: &DMatrix<f64>,
    mu: f64,
    use_weights: bool,
) -> Result<SmoothnessReport> {
    let opts = SupraOptions {
        mu,
        reduced: false,
        use_weights,
    };
    let layers: Vec<CsrMatrix> = layer_laplacians(g, &opts)?
        .into_iter()
        .map(|l| l.matrix)
        .collect();
    let supra = build_supra_laplacian(g, &opts)?;
    evaluate_against(&layers, &split_blocks(x, layers.len())?, mu, &supra.matrix)
}

fn evaluate_against(
    layers: &[CsrMatrix],
    x_blocks: &[DMatrix<f64>],
    mu: f64,
    supra: &CsrMatrix,
) -> Result<SmoothnessReport> {
    let n = common_dim(layers)?;
    if x_blocks.len() != layers.len() {
        return Err(Error::Shape(format!(
            "{} blocks for {} layers",
            x_blocks.len(),
            layers.len()
        )));
    }
    let x = stack_blocks(x_blocks)?;
    if x_blocks[0].nrows() != n {
        return Err(Error::Shape(format!(
            "blocks have {} rows, layers {n}",
            x_blocks[0].nrows()
        )));
    }
    if supra.dim() != x.nrows() {
        return Err(Error::Shape(format!(
            "supra-Laplacian has {} rows, X has {}",
            supra.dim(),
            x.nrows()
        )));
    }
    let intra: Vec<f64> = layers
        .iter()
        .zip(x_blocks)
        .map(|(l, b)| quadratic_form(l, b))
        .collect();
    let inter: Vec<f64> = x_blocks
        .windows(2)
        .map(|w| mu * (&w[1] - &w[0]).norm_squared())
        .collect();
    let total = intra.iter().sum::<f64>() + inter.iter().sum::<f64>();
    let quad_form = quadratic_form(supra, &x);
    Ok(SmoothnessReport {
        intra,
        inter,
        total,
        quad_form,
        identity_gap: (total - quad_form).abs(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimalityReport {
    pub trials: usize,
    /// `tr(Vᵀ M V)` for the `k` smallest eigenvectors.
    pub optimum: f64,
    pub min_trial: Option<f64>,
    pub median_trial: Option<f64>,
    /// Trials below `optimum - MINIMALITY_MARGIN`.
    pub violations: usize,
}

/// Haar-random `n x k` matrix with orthonormal columns (QR of a Gaussian).
pub fn random_orthonormal(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from(seed);
    let g = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // Fix the column signs so the distribution is exactly Haar.
    let mut q = q;
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Compares the eigenvector objective of `m` against `trials` random
/// orthonormal blocks. Per-trial seeds derive from `seed`.
pub fn check_minimality(
    m: &CsrMatrix,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<MinimalityReport> {
    let eig = dense_reference_with_budget(m, k, DENSE_BUDGET)?;
    let optimum = quadratic_form(m, &eig.vectors);
    let mut objectives: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            quadratic_form(
                m,
                &random_orthonormal(m.dim(), k, derive_seed(seed, i as u64)),
            )
        })
        .collect();
    let violations = objectives
        .iter()
        .filter(|&&o| o < optimum - MINIMALITY_MARGIN)
        .count();
    objectives.sort_by(f64::total_cmp);
    Ok(MinimalityReport {
        trials,
        optimum,
        min_trial: objectives.first().copied(),
        median_trial: (!objectives.is_empty()).then(|| objectives[objectives.len() / 2]),
        violations,
    })
}

/// Per-layer sign choice for the uncoupled solutions of the demo.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignPolicy {
    /// Keep the solver's output in every layer.
    Aligned,
    /// Flip each column in every other layer.
    Alternating,
    /// Independent random sign per layer and column.
    Random(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyDemo {
    pub path_length: usize,
    pub layers: usize,
    pub mu: f64,
    /// Eigenvector column written to the CSV.
    pub column: usize,
    /// `k` smallest eigenvectors of the coupled supra-Laplacian.
    pub coupled: DMatrix<f64>,
    /// Stacked per-layer eigenvectors, scaled by `1/sqrt(T)` so that columns
    /// have unit norm like `coupled`.
    pub uncoupled: DMatrix<f64>,
    pub coupled_inter: f64,
    pub uncoupled_inter: f64,
    pub coupled_objective: f64,
    pub uncoupled_objective: f64,
}

fn path_laplacian(n: usize) -> CsrMatrix {
    let mut trip = Vec::new();
    for i in 0..n - 1 {
        trip.extend([
            (i, i, 1.0),
            (i + 1, i + 1, 1.0),
            (i, i + 1, -1.0),
            (i + 1, i, -1.0),
        ]);
    }
    CsrMatrix::from_triplets(n, trip)
}

fn inter_sum(x: &DMatrix<f64>, layers: usize) -> Result<f64> {
    let blocks = split_blocks(x, layers)?;
    Ok(blocks
        .windows(2)
        .map(|w| (&w[1] - &w[0]).norm_squared())
        .sum())
}

/// `T` stacked copies of a path graph solved with coupling `mu` and without
/// coupling (independent per-layer solves with signs per `signs`).
pub fn inter_layer_consistency_demo(
    path_length: usize,
    layers: usize,
    mu: f64,
    k: usize,
    column: usize,
    signs: SignPolicy,
) -> Result<ConsistencyDemo> {
    if path_length < 2 || layers < 2 {
        return Err(Error::InvalidArgument(
            "demo needs path_length >= 2 and T >= 2".into(),
        ));
    }
    if mu.is_nan() || mu < 0.0 {
        return Err(Error::InvalidArgument(format!("mu must be >= 0, got {mu}")));
    }
    if k == 0 || k > path_length || column >= k {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= k <= {path_length} and column < k"
        )));
    }
    let layer = path_laplacian(path_length);
    let stack = vec![layer.clone(); layers];
    let supra = full_supra_laplacian(&stack, mu)?;
    let coupled = dense_reference_with_budget(&supra, k, DENSE_BUDGET)?.vectors;

    let per_layer = dense_reference_with_budget(&layer, k, DENSE_BUDGET)?.vectors;
    let mut rng = match signs {
        SignPolicy::Random(seed) => Some(rng_from(seed)),
        _ => None,
    };
    let scale = 1.0 / (layers as f64).sqrt();
    let mut uncoupled = DMatrix::zeros(path_length * layers, k);
    for t in 0..layers {
        for j in 0..k {
            let sign = match (signs, rng.as_mut()) {
                (SignPolicy::Random(_), Some(rng)) => {
                    if rand::Rng::random::<bool>(rng) {
                        1.0
                    } else {
                        -1.0
                    }
                }
                (SignPolicy::Alternating, _) if t % 2 == 1 => -1.0,
                _ => 1.0,
            };
            uncoupled
                .view_mut((t * path_length, j), (path_length, 1))
                .copy_from(&(per_layer.column(j) * (sign * scale)));
        }
    }

    Ok(ConsistencyDemo {
        path_length,
        layers,
        mu,
        column,
        coupled_inter: inter_sum(&coupled, layers)?,
        uncoupled_inter: inter_sum(&uncoupled, layers)?,
        coupled_objective: quadratic_form(&supra, &coupled),
        uncoupled_objective: quadratic_form(&supra, &uncoupled),
        coupled,
        uncoupled,
    })
}

impl ConsistencyDemo {
    /// `t,component,coupled_value,uncoupled_value`, one row per (layer, node)
    /// for the selected eigenvector column.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,component,coupled_value,uncoupled_value")?;
        for t in 0..self.layers {
            for v in 0..self.path_length {
                let r = t * self.path_length + v;
                writeln!(
                    w,
                    "{t},{v},{},{}",
                    self.coupled[(r, self.column)],
                    self.uncoupled[(r, self.column)]
                )?;
            }
        }
        Ok(())
    }
}
