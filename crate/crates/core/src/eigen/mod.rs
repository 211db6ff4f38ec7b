//! Smallest eigenpairs of sparse symmetric positive semi-definite matrices.
//!
//! Three strategies share one result type: a dense reference decomposition,
//! thick-restart Lanczos run to convergence, and unpreconditioned LOBPCG with
//! an iteration cap. Iterative solvers can record every intermediate iterate
//! so that [`build_trajectory`] can concatenate them.

mod basis;
mod dense;
mod lanczos;
mod lobpcg;
mod trajectory;

pub use dense::{dense_reference, dense_reference_with_budget, DENSE_BUDGET};
pub use lanczos::lanczos;
pub use lobpcg::lobpcg;
pub use trajectory::{build_trajectory, Trajectory};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Default limit on `K * k * rows` stored by trajectory capture.
pub const TRAJECTORY_BUDGET: usize = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Lanczos,
    Lobpcg,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Dense => "dense",
            Method::Lanczos => "lanczos",
            Method::Lobpcg => "lobpcg",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Method::Dense),
            "lanczos" => Ok(Method::Lanczos),
            "lobpcg" => Ok(Method::Lobpcg),
            _ => Err(Error::InvalidArgument(format!("unknown solver {s:?}"))),
        }
    }
}

/// Starting block for the iterative solvers.
#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    Normal,
    Rademacher,
    Uniform,
    /// Columns of a previous solution; missing columns are drawn normally.
    WarmStart(DMatrix<f64>),
}

impl std::str::FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Init::Normal),
            "rademacher" => Ok(Init::Rademacher),
            "uniform" => Ok(Init::Uniform),
            _ => Err(Error::InvalidArgument(format!(
                "unknown init {s:?} (warm starts are set programmatically)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub k: usize,
    /// Absolute bound on every `||A v - lambda v||_2`.
    pub tol: f64,
    /// Lanczos: restart cycles. LOBPCG: block iterations.
    pub maxiter: usize,
    pub seed: u64,
    pub init: Init,
    pub capture_trajectory: bool,
    /// Keep every `stride`-th iterate when capturing.
    pub trajectory_stride: usize,
    pub trajectory_budget: usize,
    /// Lanczos basis size per restart cycle; `None` picks `max(8k, 64)`.
    pub lanczos_basis: Option<usize>,
    /// After Lanczos converges, search the orthogonal complement of the
    /// computed pairs for anything smaller (catches missed multiplicities).
    pub lanczos_deflation_check: bool,
}

impl SolverConfig {
    /// Settings for a solve run to convergence.
    pub fn exact(k: usize) -> Self {
        SolverConfig {
            k,
            tol: 1e-8,
            maxiter: 5_000,
            seed: 0,
            init: Init::Normal,
            capture_trajectory: false,
            trajectory_stride: 1,
            trajectory_budget: TRAJECTORY_BUDGET,
            lanczos_basis: None,
            lanczos_deflation_check: true,
        }
    }

    /// Settings for an iteration-capped solve.
    pub fn inexact(k: usize) -> Self {
        SolverConfig {
            maxiter: 20,
            ..SolverConfig::exact(k)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_maxiter(mut self, maxiter: usize) -> Self {
        self.maxiter = maxiter;
        self
    }

    pub fn with_trajectory(mut self) -> Self {
        self.capture_trajectory = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument("tol must be > 0".into()));
        }
        if self.maxiter == 0 {
            return Err(Error::InvalidArgument("maxiter must be >= 1".into()));
        }
        if self.trajectory_stride == 0 {
            return Err(Error::InvalidArgument(
                "trajectory stride must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Number of snapshots a capped run can store.
    pub fn max_snapshots(&self) -> usize {
        self.maxiter.div_ceil(self.trajectory_stride)
    }

    pub(crate) fn check_trajectory_budget(&self, rows: usize) -> Result<()> {
        if !self.capture_trajectory {
            return Ok(());
        }
        let elements = self
            .max_snapshots()
            .saturating_mul(self.k)
            .saturating_mul(rows);
        if elements > self.trajectory_budget {
            return Err(Error::TrajectoryBudget {
                elements,
                budget: self.trajectory_budget,
            });
        }
        Ok(())
    }
}

/// One captured solver iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct Iterate {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolverEvents {
    /// LOBPCG iterations that ran without the P block.
    pub p_block_drops: usize,
    /// Lanczos invariant-subspace breakdowns answered with a fresh vector.
    pub breakdowns: usize,
    /// Pairs replaced after the Lanczos deflation check.
    pub deflation_swaps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    /// Ascending eigenvalue estimates.
    pub values: Vec<f64>,
    /// `rows x k`; column `j` pairs with `values[j]`.
    pub vectors: DMatrix<f64>,
    pub method: Method,
    pub iterations: usize,
    pub converged: bool,
    pub residual_norms: Vec<f64>,
    pub trajectory: Option<Vec<Iterate>>,
    pub events: SolverEvents,
}

impl EigenResult {
    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn max_residual(&self) -> f64 {
        self.residual_norms.iter().copied().fold(0.0, f64::max)
    }
}

/// `||A v_j - lambda_j v_j||_2` for every column.
pub fn residual_norms(m: &CsrMatrix, values: &[f64], vectors: &DMatrix<f64>) -> Vec<f64> {
    let mut av = vec![0.0; m.dim()];
    values
        .iter()
        .enumerate()
        .map(|(j, &lambda)| {
            let v = vectors.column(j);
            m.mul_vec_into(v.as_slice(), &mut av);
            av.iter()
                .zip(v.iter())
                .map(|(a, x)| (a - lambda * x).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Symmetric eigendecomposition with ascending eigenvalues.
pub(crate) fn sorted_sym_eig(h: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = h.nrows();
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub(crate) fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn random_vector(n: usize, init: &Init, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n)
        .map(|_| match init {
            Init::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Init::Uniform => rng.random_range(-1.0..1.0),
            Init::Normal | Init::WarmStart(_) => rng.sample(StandardNormal),
        })
        .collect()
}

pub(crate) fn initial_block(
    n: usize,
    cols: usize,
    init: &Init,
    rng: &mut ChaCha8Rng,
) -> Result<DMatrix<f64>> {
    let mut block = DMatrix::zeros(n, cols);
    let mut start = 0;
    if let Init::WarmStart(prev) = init {
        if prev.nrows() != n {
            return Err(Error::Shape(format!(
                "warm start has {} rows, matrix has {n}",
                prev.nrows()
            )));
        }
        start = prev.ncols().min(cols);
        block
            .columns_mut(0, start)
            .copy_from(&prev.columns(0, start));
    }
    for j in start..cols {
        let v = random_vector(n, init, rng);
        block.column_mut(j).copy_from_slice(&v);
    }
    Ok(block)
}

/// Inner product with four independent accumulators, which lets the
/// compiler vectorize the loop. The summation order is fixed, so results are
/// reproducible.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`.
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Removes from `w` its components along each (orthonormal) vector in
/// `basis`, returning the coefficients that were removed.
pub(crate) fn project_out<'a, I>(w: &mut [f64], basis: I) -> Vec<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    basis
        .into_iter()
        .map(|b| {
            let c = dot(b, w);
            axpy(-c, b, w);
            c
        })
        .collect()
}

/// Orthonormalizes the columns of `block` in place against `against` (whose
/// columns are orthonormal) and among themselves, using two Gram-Schmidt
/// passes. Returns the indices of columns that kept at least `drop_ratio` of
/// their norm; the others are numerically dependent and should be discarded.
pub(crate) fn orthonormalize(
    block: &mut DMatrix<f64>,
    against: &[&DMatrix<f64>],
    drop_ratio: f64,
) -> Vec<usize> {
    let n = block.nrows();
    let mut kept: Vec<usize> = Vec::new();
    let data = block.as_mut_slice();
    for j in 0..data.len() / n.max(1) {
        let (head, tail) = data.split_at_mut(j * n);
        let col = &mut tail[..n];
        let before = norm(col);
        if before == 0.0 || !before.is_finite() {
            continue;
        }
        for _ in 0..2 {
            for a in against {
                project_out(col, a.as_slice().chunks_exact(n));
            }
            project_out(col, kept.iter().map(|&c| &head[c * n..(c + 1) * n]));
        }
        let after = norm(col);
        if after > drop_ratio * before && after > 0.0 {
            col.iter_mut().for_each(|x| *x /= after);
            kept.push(j);
        }
    }
    kept
}

pub(crate) fn select_columns(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), cols.len(), |r, c| m[(r, cols[c])])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::exact(0).validate().is_err());
        assert!(SolverConfig::exact(2).with_tol(0.0).validate().is_err());
        assert!(SolverConfig::inexact(2).with_maxiter(0).validate().is_err());
        assert!(SolverConfig::inexact(2).validate().is_ok());
        assert_eq!(SolverConfig::inexact(2).maxiter, 20);
        assert_eq!(SolverConfig::exact(2).tol, 1e-8);
    }

    #[test]
    fn trajectory_budget_guard() {
        let mut cfg = SolverConfig::inexact(4).with_trajectory();
        cfg.trajectory_budget = 1000;
        assert!(cfg.check_trajectory_budget(12).is_ok()); // 20*4*12 = 960
        assert!(matches!(
            cfg.check_trajectory_budget(13),
            Err(Error::TrajectoryBudget { elements: 1040, .. })
        ));
    }

    #[test]
    fn orthonormalize_drops_dependent_columns() {
        let mut m =
            DMatrix::from_column_slice(3, 3, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        let kept = orthonormalize(&mut m, &[], 1e-10);
        assert_eq!(kept, vec![0, 2]);
        assert!((m.column(2).norm() - 1.0).abs() < 1e-15);
        assert!(m.column(0).dot(&m.column(2)).abs() < 1e-15);
    }

    #[test]
    fn init_modes_are_seeded() {
        for init in [Init::Normal, Init::Rademacher, Init::Uniform] {
            let a = initial_block(5, 2, &init, &mut rng_from(3)).unwrap();
            let b = initial_block(5, 2, &init, &mut rng_from(3)).unwrap();
            assert_eq!(a, b);
        }
        let r = initial_block(50, 1, &Init::Rademacher, &mut rng_from(1)).unwrap();
        assert!(r.iter().all(|x| x.abs() == 1.0));
        let u = initial_block(50, 1, &Init::Uniform, &mut rng_from(1)).unwrap();
        assert!(u.iter().all(|x| (-1.0..1.0).contains(x)));
        let prev = DMatrix::from_element(4, 1, 0.5);
        let w = initial_block(4, 2, &Init::WarmStart(prev), &mut rng_from(1)).unwrap();
        assert_eq!(w.column(0).as_slice(), &[0.5; 4]);
        assert!(initial_block(
            5,
            1,
            &Init::WarmStart(DMatrix::zeros(4, 1)),
            &mut rng_from(1)
        )
        .is_err());
    }
}
