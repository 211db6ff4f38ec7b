use nalgebra::DMatrix;
use rand::Rng;

use super::{rng_from, EigenResult};
use crate::error::{Error, Result};

/// Concatenated solver iterates `[U(1), ..., U(K)]` and `[L(1), ..., L(K)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub values: Vec<f64>,
    /// `rows x (K * k)`, iterate-major.
    pub vectors: DMatrix<f64>,
    pub iterates: usize,
    pub k: usize,
    pub signs: Vec<f64>,
}

/// Concatenates the captured iterates of `result`.
///
/// Every column of every iterate is first aligned with the matching column of
/// the final iterate (flipped when their inner product is negative), then
/// multiplied by one random sign per eigenvector index, shared across all
/// iterates.
pub fn build_trajectory(result: &EigenResult, sign_seed: u64) -> Result<Trajectory> {
    let iterates = match &result.trajectory {
        Some(t) if !t.is_empty() => t,
        _ => return Err(Error::EmptyTrajectory),
    };
    let k = result.k();
    let rows = result.vectors.nrows();
    let mut rng = rng_from(sign_seed);
    let signs: Vec<f64> = (0..k)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();

    let mut vectors = DMatrix::zeros(rows, iterates.len() * k);
    let mut values = Vec::with_capacity(iterates.len() * k);
    for (it, snap) in iterates.iter().enumerate() {
        if snap.vectors.ncols() != k || snap.vectors.nrows() != rows {
            return Err(Error::Shape(format!(
                "iterate {it} is {}x{}, expected {rows}x{k}",
                snap.vectors.nrows(),
                snap.vectors.ncols()
            )));
        }
        for (j, &sign) in signs.iter().enumerate() {
            let col = snap.vectors.column(j);
            let align = if col.dot(&result.vectors.column(j)) < 0.0 {
                -1.0
            } else {
                1.0
            };
            vectors
                .column_mut(it * k + j)
                .copy_from(&(col * (align * sign)));
        }
        values.extend_from_slice(&snap.values);
    }
    Ok(Trajectory {
        values,
        vectors,
        iterates: iterates.len(),
        k,
        signs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{lobpcg, Iterate, Method, SolverConfig, SolverEvents};
    use crate::sparse::CsrMatrix;

    fn result_with(iterates: Vec<Iterate>) -> EigenResult {
        let last = iterates.last().cloned();
        let (values, vectors) = last
            .map(|l| (l.values, l.vectors))
            .unwrap_or((vec![1.0], DMatrix::from_element(3, 1, 0.5)));
        EigenResult {
            residual_norms: vec![0.0; values.len()],
            values,
            vectors,
            method: Method::Lobpcg,
            iterations: iterates.len(),
            converged: false,
            trajectory: Some(iterates),
            events: SolverEvents::default(),
        }
    }

    #[test]
    fn empty_trajectory_is_an_error() {
        let r = result_with(vec![]);
        assert!(matches!(
            build_trajectory(&r, 0),
            Err(Error::EmptyTrajectory)
        ));
        let mut r = result_with(vec![]);
        r.trajectory = None;
        assert!(build_trajectory(&r, 0).is_err());
    }

    #[test]
    fn single_iterate_is_signed_copy() {
        let v = DMatrix::from_column_slice(3, 2, &[0.6, 0.8, 0.0, 0.0, 0.0, -1.0]);
        let r = result_with(vec![Iterate {
            values: vec![0.5, 1.5],
            vectors: v.clone(),
        }]);
        let t = build_trajectory(&r, 42).unwrap();
        assert_eq!(t.values, vec![0.5, 1.5]);
        for j in 0..2 {
            assert_eq!(t.vectors.column(j), v.column(j) * t.signs[j]);
        }
    }

    #[test]
    fn flipped_iterates_are_aligned_to_the_final_one() {
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let b = DMatrix::from_column_slice(2, 1, &[-0.9, -0.1]);
        let r = result_with(vec![
            Iterate {
                values: vec![2.0],
                vectors: b,
            },
            Iterate {
                values: vec![1.0],
                vectors: a,
            },
        ]);
        let t = build_trajectory(&r, 1).unwrap();
        let s = t.signs[0];
        assert_eq!(t.vectors.column(0).as_slice(), &[0.9 * s, 0.1 * s]);
        assert_eq!(t.vectors.column(1).as_slice(), &[s, 0.0]);
        assert_eq!(t.values, vec![2.0, 1.0]);
    }

    #[test]
    fn shape_and_determinism() {
        let mut trip = Vec::new();
        for i in 0..29 {
            trip.extend([
                (i, i, 1.0),
                (i + 1, i + 1, 1.0),
                (i, i + 1, -1.0),
                (i + 1, i, -1.0),
            ]);
        }
        let m = CsrMatrix::from_triplets(30, trip);
        let r = lobpcg(
            &m,
            &SolverConfig::inexact(2).with_maxiter(3).with_trajectory(),
        )
        .unwrap();
        assert_eq!(r.iterations, 3);
        let t = build_trajectory(&r, 7).unwrap();
        assert_eq!(t.vectors.shape(), (30, 6));
        assert_eq!(t.values.len(), 6);
        assert_eq!(t, build_trajectory(&r, 7).unwrap());
    }
}
