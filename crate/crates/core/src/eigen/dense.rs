use super::{residual_norms, sorted_sym_eig, EigenResult, Method, SolverEvents};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Largest matrix (in rows) the dense reference will factor by default.
pub const DENSE_BUDGET: usize = 5_000;

/// Full dense symmetric eigendecomposition keeping the `k` smallest pairs.
pub fn dense_reference(m: &CsrMatrix, k: usize) -> Result<EigenResult> {
    dense_reference_with_budget(m, k, DENSE_BUDGET)
}

pub fn dense_reference_with_budget(m: &CsrMatrix, k: usize, budget: usize) -> Result<EigenResult> {
    let n = m.dim();
    if n > budget {
        return Err(Error::DenseBudget { rows: n, budget });
    }
    if k == 0 || k > n {
        return Err(Error::TooManyEigenpairs {
            k,
            rows: n,
            bound: "1 <= k <= rows",
        });
    }
    let (values, vectors) = sorted_sym_eig(m.to_dense());
    let values = values[..k].to_vec();
    let mut vectors = vectors.columns(0, k).into_owned();
    for mut c in vectors.column_iter_mut() {
        let nrm = c.norm();
        c /= nrm;
    }
    let residual_norms = residual_norms(m, &values, &vectors);
    Ok(EigenResult {
        values,
        vectors,
        method: Method::Dense,
        iterations: 1,
        converged: true,
        residual_norms,
        trajectory: None,
        events: SolverEvents::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_spectrum() {
        let m = CsrMatrix::from_triplets(
            2,
            vec![(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)],
        );
        let r = dense_reference(&m, 2).unwrap();
        assert!(r.values[0].abs() < 1e-14);
        assert!((r.values[1] - 2.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = r.vectors.column(0);
        assert!((v0[0].abs() - s).abs() < 1e-14 && (v0[0] - v0[1]).abs() < 1e-14);
        let v1 = r.vectors.column(1);
        assert!((v1[0].abs() - s).abs() < 1e-14 && (v1[0] + v1[1]).abs() < 1e-14);
        assert!(r.residual_norms.iter().all(|&x| x < 1e-13));
    }

    #[test]
    fn budget_and_k_bounds() {
        let m = CsrMatrix::zeros(10);
        assert!(matches!(
            dense_reference_with_budget(&m, 2, 5),
            Err(Error::DenseBudget {
                rows: 10,
                budget: 5
            })
        ));
        assert!(dense_reference(&m, 11).is_err());
        assert!(dense_reference(&m, 0).is_err());
    }
}
