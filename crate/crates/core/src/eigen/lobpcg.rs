//! Locally optimal block preconditioned conjugate gradient, without a
//! preconditioner.
//!
//! Every iteration performs Rayleigh-Ritz on `span[X, R, P]` where `X` holds
//! the current Ritz vectors, `R` the residuals of the still-active columns
//! and `P` the previous search directions. The trial basis is made
//! orthonormal explicitly; when the `P` block is numerically dependent on
//! `[X, R]` it is dropped for that iteration.

use log::{debug, warn};
use nalgebra::DMatrix;

use super::{
    initial_block, orthonormalize, residual_norms, rng_from, select_columns, sorted_sym_eig,
    EigenResult, Iterate, Method, SolverConfig, SolverEvents,
};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Columns keeping less than this fraction of their norm after
/// orthogonalization count as dependent.
const DEPENDENCE_RATIO: f64 = 1e-8;

pub fn lobpcg(m: &CsrMatrix, cfg: &SolverConfig) -> Result<EigenResult> {
    cfg.validate()?;
    let n = m.dim();
    let k = cfg.k;
    if 2 * k > n {
        return Err(Error::TooManyEigenpairs {
            k,
            rows: n,
            bound: "k <= rows/2",
        });
    }
    cfg.check_trajectory_budget(n)?;

    let mut rng = rng_from(cfg.seed);
    let mut x = initial_block(n, k, &cfg.init, &mut rng)?;
    loop {
        let kept = orthonormalize(&mut x, &[], DEPENDENCE_RATIO);
        if kept.len() == k {
            break;
        }
        // Dependent starting columns (e.g. a rank-deficient warm start).
        for j in (0..k).filter(|j| !kept.contains(j)) {
            let v = super::random_vector(n, &super::Init::Normal, &mut rng);
            x.column_mut(j).copy_from_slice(&v);
        }
    }

    let ax = m.mul_dense(&x);
    let (theta, c) = sorted_sym_eig(symmetric_part(x.transpose() * &ax));
    let mut x = &x * &c;
    let mut ax = &ax * &c;
    let mut lambda = theta;

    let mut p: Option<(DMatrix<f64>, DMatrix<f64>)> = None;
    let mut events = SolverEvents::default();
    let mut trajectory = cfg.capture_trajectory.then(Vec::new);
    let mut iterations = 0;

    loop {
        let r = &ax - &x * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&lambda));
        let norms: Vec<f64> = r.column_iter().map(|c| c.norm()).collect();
        let active: Vec<usize> = (0..k).filter(|&j| norms[j] > cfg.tol).collect();
        if active.is_empty() || iterations >= cfg.maxiter {
            break;
        }

        let mut w = select_columns(&r, &active);
        let w_kept = orthonormalize(&mut w, &[&x], DEPENDENCE_RATIO);
        let w = select_columns(&w, &w_kept);

        let p_block = p.as_ref().and_then(|(p_all, _)| {
            let mut pa = select_columns(p_all, &active);
            let kept = orthonormalize(&mut pa, &[&x, &w], DEPENDENCE_RATIO);
            if kept.len() == pa.ncols() {
                Some(pa)
            } else {
                events.p_block_drops += 1;
                debug!(
                    "lobpcg iteration {}: dropping ill-conditioned P block",
                    iterations + 1
                );
                None
            }
        });

        let mut blocks = vec![x.clone(), w.clone()];
        if let Some(pa) = &p_block {
            blocks.push(pa.clone());
        }
        let q = hstack(&blocks);
        let mut a_blocks = vec![ax.clone(), m.mul_dense(&w)];
        if let Some(pa) = &p_block {
            a_blocks.push(m.mul_dense(pa));
        }
        let aq = hstack(&a_blocks);

        let (theta, c) = sorted_sym_eig(symmetric_part(q.transpose() * &aq));
        let ck = c.columns(0, k);
        let new_x = &q * ck;
        let new_ax = &aq * ck;

        let tail = q.ncols() - k;
        let c_tail = ck.rows(k, tail);
        let new_p = q.columns(k, tail) * c_tail;
        let new_ap = aq.columns(k, tail) * c_tail;
        p = Some((new_p, new_ap));

        x = new_x;
        ax = new_ax;
        lambda = theta[..k].to_vec();
        iterations += 1;

        if let Some(traj) = trajectory.as_mut() {
            if iterations % cfg.trajectory_stride == 0 {
                traj.push(Iterate {
                    values: lambda.clone(),
                    vectors: x.clone(),
                });
            }
        }
    }

    let residual_norms = residual_norms(m, &lambda, &x);
    let converged = residual_norms.iter().all(|&r| r <= cfg.tol);
    if !converged && cfg.maxiter >= 1000 {
        warn!("lobpcg reached {iterations} iterations without converging");
    }
    Ok(EigenResult {
        values: lambda,
        vectors: x,
        method: Method::Lobpcg,
        iterations,
        converged,
        residual_norms,
        trajectory,
        events,
    })
}

fn symmetric_part(h: DMatrix<f64>) -> DMatrix<f64> {
    (&h + h.transpose()) * 0.5
}

fn hstack(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::dense_reference;

    fn cycle_laplacian(n: usize, chord: usize) -> CsrMatrix {
        let mut t = Vec::new();
        let mut edge = |i: usize, j: usize| {
            t.extend([(i, i, 1.0), (j, j, 1.0), (i, j, -1.0), (j, i, -1.0)]);
        };
        for i in 0..n {
            edge(i, (i + 1) % n);
        }
        for i in (0..n).step_by(chord) {
            edge(i, (i + n / 2 + 1) % n);
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn converged_run_matches_dense() {
        let m = cycle_laplacian(60, 7);
        let cfg = SolverConfig::exact(4).with_tol(1e-7).with_seed(2);
        let r = lobpcg(&m, &cfg).unwrap();
        let d = dense_reference(&m, 4).unwrap();
        assert!(r.converged, "residuals {:?}", r.residual_norms);
        for (a, b) in r.values.iter().zip(&d.values) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_k_above_half_the_rows() {
        let m = CsrMatrix::from_triplets(1, vec![(0, 0, 0.0)]);
        assert!(matches!(
            lobpcg(&m, &SolverConfig::inexact(1)),
            Err(Error::TooManyEigenpairs { .. })
        ));
        let m = cycle_laplacian(10, 3);
        assert!(lobpcg(&m, &SolverConfig::inexact(6)).is_err());
        assert!(lobpcg(&m, &SolverConfig::inexact(5)).is_ok());
    }

    #[test]
    fn capped_run_has_monotone_ritz_values() {
        let m = cycle_laplacian(400, 13);
        let cfg = SolverConfig::inexact(3)
            .with_maxiter(5)
            .with_seed(9)
            .with_trajectory();
        let r = lobpcg(&m, &cfg).unwrap();
        let traj = r.trajectory.as_ref().unwrap();
        assert_eq!(traj.len(), r.iterations);
        assert_eq!(r.iterations, 5);
        assert!(!r.converged);
        for pair in traj.windows(2) {
            for j in 0..3 {
                assert!(pair[1].values[j] <= pair[0].values[j] + 1e-10);
            }
        }
        for c in r.vectors.column_iter() {
            assert!((c.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn stride_thins_the_trajectory() {
        let m = cycle_laplacian(200, 9);
        let mut cfg = SolverConfig::inexact(2).with_maxiter(10).with_trajectory();
        cfg.trajectory_stride = 3;
        let r = lobpcg(&m, &cfg).unwrap();
        assert_eq!(r.trajectory.unwrap().len(), 3);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let m = cycle_laplacian(120, 5);
        let cfg = SolverConfig::inexact(3).with_seed(5).with_trajectory();
        assert_eq!(lobpcg(&m, &cfg).unwrap(), lobpcg(&m, &cfg).unwrap());
    }
}
