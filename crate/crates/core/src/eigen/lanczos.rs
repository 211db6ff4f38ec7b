//! Thick-restart Lanczos with full reorthogonalization.
//!
//! Each restart cycle grows an orthonormal Krylov basis `V` to the basis size,
//! storing the projected matrix `H = V^T A V` densely, then performs
//! Rayleigh-Ritz on `H`. The Ritz pairs nearest the bottom of the spectrum
//! are kept and the last residual direction seeds the next cycle. Since
//! `A V = V H + f e_m^T`, the residual of a Ritz pair `(theta, V y)` is
//! `||f|| |y_m|`, which is the cheap convergence test; converged pairs are
//! confirmed with explicit residuals.

use log::warn;
use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;

use super::basis::Basis;
use super::{
    norm, random_vector, residual_norms, rng_from, sorted_sym_eig, EigenResult, Init, Iterate,
    Method, SolverConfig, SolverEvents,
};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub fn lanczos(m: &CsrMatrix, cfg: &SolverConfig) -> Result<EigenResult> {
    cfg.validate()?;
    let n = m.dim();
    let k = cfg.k;
    if k > n {
        return Err(Error::TooManyEigenpairs {
            k,
            rows: n,
            bound: "k <= rows",
        });
    }
    cfg.check_trajectory_budget(n)?;

    let mut rng = rng_from(cfg.seed);
    let start = match &cfg.init {
        Init::WarmStart(prev) if prev.nrows() == n && prev.ncols() > 0 => {
            prev.column_sum().as_slice().to_vec()
        }
        Init::WarmStart(prev) if prev.nrows() != n => {
            return Err(Error::Shape(format!(
                "warm start has {} rows, matrix has {n}",
                prev.nrows()
            )))
        }
        init => random_vector(n, init, &mut rng),
    };

    let solver = Solver {
        m,
        basis: cfg.lanczos_basis.unwrap_or((8 * k).max(64)),
        tol: cfg.tol,
        max_cycles: cfg.maxiter,
        breakdown: 1e-12 * inf_norm(m).max(f64::MIN_POSITIVE),
    };
    let mut events = SolverEvents::default();
    let mut capture = cfg.capture_trajectory.then(|| Capture {
        stride: cfg.trajectory_stride,
        iterates: Vec::new(),
    });

    let main = solver.run(&[], k, start, &mut rng, &mut events, capture.as_mut());
    let iterations = main.cycles;
    let mut converged = main.converged;
    let mut values = main.values;
    let mut vectors = main.vectors;

    if converged && cfg.lanczos_deflation_check && n > k {
        for _ in 0..=k {
            let start = random_vector(n, &Init::Normal, &mut rng);
            let probe = solver.run(&vectors, 1, start, &mut rng, &mut events, None);
            if !probe.converged {
                converged = false;
                warn!("lanczos deflation check did not converge");
                break;
            }
            if probe.values[0] >= values[k - 1] - cfg.tol {
                break;
            }
            events.deflation_swaps += 1;
            values[k - 1] = probe.values[0];
            vectors[k - 1] = probe.vectors.into_iter().next().unwrap();
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            values = order.iter().map(|&i| values[i]).collect();
            vectors = order.iter().map(|&i| vectors[i].clone()).collect();
        }
    }

    let vectors = to_matrix(n, &vectors);
    let residual_norms = residual_norms(m, &values, &vectors);
    converged = converged && residual_norms.iter().all(|&r| r <= cfg.tol);
    if !converged {
        warn!(
            "lanczos stopped after {iterations} cycles without reaching tol {:e} (max residual {:e})",
            cfg.tol,
            residual_norms.iter().copied().fold(0.0, f64::max)
        );
    }
    Ok(EigenResult {
        values,
        vectors,
        method: Method::Lanczos,
        iterations,
        converged,
        residual_norms,
        trajectory: capture.map(|c| c.iterates),
        events,
    })
}

struct Capture {
    stride: usize,
    iterates: Vec<Iterate>,
}

struct Solver<'a> {
    m: &'a CsrMatrix,
    basis: usize,
    tol: f64,
    max_cycles: usize,
    breakdown: f64,
}

struct Outcome {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    cycles: usize,
    converged: bool,
}

impl Solver<'_> {
    /// Computes the `want` smallest eigenpairs of `A` restricted to the
    /// orthogonal complement of `deflate`.
    fn run(
        &self,
        deflate: &[Vec<f64>],
        want: usize,
        start: Vec<f64>,
        rng: &mut ChaCha8Rng,
        events: &mut SolverEvents,
        mut capture: Option<&mut Capture>,
    ) -> Outcome {
        let n = self.m.dim();
        let dim = n - deflate.len();
        let size = self.basis.max(want + 1).min(dim);
        let deflate = Basis::from_columns(n, deflate);

        let mut basis = Basis::with_capacity(n, size);
        let first = self
            .orthonormal_direction(start, &deflate, &basis)
            .unwrap_or_else(|| self.fresh_vector(&deflate, &basis, rng));
        basis.push(&first);
        let mut h = DMatrix::<f64>::zeros(size, size);
        let mut w = vec![0.0; n];
        let mut residual = vec![0.0; n];
        let mut residual_norm = 0.0;
        let mut expand_from = 0;
        let mut cycles = 0;

        loop {
            for j in expand_from..size {
                self.m.mul_vec_into(basis.col(j), &mut w);
                deflate.cgs2(&mut w);
                // Beyond the first new vector of a cycle, A v_j has large
                // components only along v_{j-1} and v_j.
                let c = if j == expand_from {
                    basis.cgs2(&mut w)
                } else {
                    basis.local_then_full(&mut w, j - 1..j + 1)
                };
                // Rounding leaks deflated directions back in, and Lanczos
                // amplifies them when they lie below the deflated spectrum.
                deflate.cgs2(&mut w);
                for (i, &hij) in c.iter().enumerate() {
                    h[(i, j)] = hij;
                    h[(j, i)] = hij;
                }
                let beta = norm(&w);
                if j + 1 < size {
                    if beta > self.breakdown {
                        w.iter_mut().for_each(|x| *x /= beta);
                        basis.push(&w);
                    } else {
                        events.breakdowns += 1;
                        let v = self.fresh_vector(&deflate, &basis, rng);
                        basis.push(&v);
                    }
                } else {
                    residual.copy_from_slice(&w);
                    residual_norm = beta;
                }
            }

            let (theta, y) = sorted_sym_eig(h.clone());
            cycles += 1;
            let ritz = |count: usize| basis.combine(&y, count);

            if let Some(cap) = capture.as_deref_mut() {
                if cycles % cap.stride == 0 {
                    cap.iterates.push(Iterate {
                        values: theta[..want].to_vec(),
                        vectors: ritz(want),
                    });
                }
            }

            let estimates_ok =
                (0..want).all(|i| residual_norm * y[(size - 1, i)].abs() <= self.tol);
            let exhausted = size == dim;
            if estimates_ok || exhausted || cycles >= self.max_cycles {
                let vectors = columns(&ritz(want));
                let values = theta[..want].to_vec();
                let converged = vectors
                    .iter()
                    .zip(&values)
                    .all(|(x, &lambda)| self.projected_residual(x, lambda, &deflate) <= self.tol);
                if converged || exhausted || cycles >= self.max_cycles {
                    return Outcome {
                        values,
                        vectors,
                        cycles,
                        converged,
                    };
                }
            }

            let keep = (want + (size - want) / 3).clamp(want, size - 1);
            let kept = Basis::from_matrix(&ritz(keep), size);
            let next = if residual_norm > self.breakdown {
                let dir: Vec<f64> = residual.iter().map(|x| x / residual_norm).collect();
                self.orthonormal_direction(dir, &deflate, &kept)
                    .unwrap_or_else(|| self.fresh_vector(&deflate, &kept, rng))
            } else {
                events.breakdowns += 1;
                self.fresh_vector(&deflate, &kept, rng)
            };
            h.fill(0.0);
            for (i, &t) in theta[..keep].iter().enumerate() {
                h[(i, i)] = t;
            }
            basis = kept;
            basis.push(&next);
            expand_from = keep;
        }
    }

    fn projected_residual(&self, x: &[f64], lambda: f64, deflate: &Basis) -> f64 {
        let mut ax = self.m.mul_vec(x);
        deflate.cgs2(&mut ax);
        ax.iter()
            .zip(x)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn orthonormal_direction(
        &self,
        mut v: Vec<f64>,
        deflate: &Basis,
        basis: &Basis,
    ) -> Option<Vec<f64>> {
        let before = norm(&v);
        if before == 0.0 || !before.is_finite() {
            return None;
        }
        deflate.cgs2(&mut v);
        basis.cgs2(&mut v);
        let after = norm(&v);
        if after <= 1e-10 * before {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= after);
        Some(v)
    }

    fn fresh_vector(&self, deflate: &Basis, basis: &Basis, rng: &mut ChaCha8Rng) -> Vec<f64> {
        loop {
            let v = random_vector(self.m.dim(), &Init::Normal, rng);
            if let Some(v) = self.orthonormal_direction(v, deflate, basis) {
                return v;
            }
        }
    }
}

fn inf_norm(m: &CsrMatrix) -> f64 {
    (0..m.dim())
        .map(|i| m.row(i).map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter()
        .map(|c| c.iter().copied().collect())
        .collect()
}

fn to_matrix(n: usize, cols: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(n, cols.len(), |r, c| cols[c][r])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{dense_reference, dot};

    fn is_orthonormal(cols: &[Vec<f64>], tol: f64) -> bool {
        cols.iter().enumerate().all(|(i, a)| {
            cols.iter()
                .enumerate()
                .all(|(j, b)| (dot(a, b) - if i == j { 1.0 } else { 0.0 }).abs() <= tol)
        })
    }

    fn path_laplacian(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.extend([
                (i, i, 1.0),
                (i + 1, i + 1, 1.0),
                (i, i + 1, -1.0),
                (i + 1, i, -1.0),
            ]);
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn matches_dense_on_a_path() {
        let m = path_laplacian(120);
        let cfg = SolverConfig::exact(5).with_seed(4);
        let r = lanczos(&m, &cfg).unwrap();
        let d = dense_reference(&m, 5).unwrap();
        assert!(r.converged);
        for (a, b) in r.values.iter().zip(&d.values) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!(r.residual_norms.iter().all(|&x| x <= 1e-8));
    }

    #[test]
    fn connected_kernel() {
        let m = path_laplacian(30);
        let r = lanczos(&m, &SolverConfig::exact(1)).unwrap();
        assert!(r.values[0].abs() < 1e-8);
        let c = 1.0 / (30f64).sqrt();
        assert!(r.vectors.iter().all(|x| (x.abs() - c).abs() < 1e-6));
    }

    #[test]
    fn single_cycle_cap_does_not_converge() {
        let m = path_laplacian(100);
        let r = lanczos(&m, &SolverConfig::exact(4).with_maxiter(1)).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.residual_norms.len(), 4);
        assert!(r.max_residual() > 1e-8);
    }

    #[test]
    fn finds_repeated_eigenvalues() {
        // Three disjoint edges: eigenvalue 0 and 2, each with multiplicity 3.
        let mut t = Vec::new();
        for b in 0..3 {
            let (i, j) = (2 * b, 2 * b + 1);
            t.extend([(i, i, 1.0), (j, j, 1.0), (i, j, -1.0), (j, i, -1.0)]);
        }
        let m = CsrMatrix::from_triplets(6, t);
        let r = lanczos(&m, &SolverConfig::exact(4)).unwrap();
        assert!(r.converged);
        let expect = [0.0, 0.0, 0.0, 2.0];
        for (a, b) in r.values.iter().zip(expect) {
            assert!((a - b).abs() < 1e-8, "{:?}", r.values);
        }
        assert!(is_orthonormal(
            &r.vectors
                .column_iter()
                .map(|c| c.iter().copied().collect())
                .collect::<Vec<_>>(),
            1e-10
        ));
    }

    #[test]
    fn deflation_check_recovers_hidden_multiplicity() {
        // Two disjoint 40-node paths share every eigenvalue; a start vector
        // supported on one path alone cannot see the other in exact arithmetic.
        let p = path_laplacian(40);
        let mut t: Vec<_> = p.triplets().collect();
        t.extend(p.triplets().map(|(i, j, v)| (i + 40, j + 40, v)));
        let m = CsrMatrix::from_triplets(80, t);
        let mut warm = DMatrix::zeros(80, 1);
        for i in 0..40 {
            warm[(i, 0)] = ((i * 7 % 11) as f64) - 5.0;
        }
        let mut cfg = SolverConfig::exact(4);
        cfg.lanczos_basis = Some(20);
        cfg.init = Init::WarmStart(warm);
        let r = lanczos(&m, &cfg).unwrap();
        let d = dense_reference(&m, 4).unwrap();
        assert!(r.converged);
        for (a, b) in r.values.iter().zip(&d.values) {
            assert!((a - b).abs() < 1e-8, "{:?} vs {:?}", r.values, d.values);
        }
        assert!(r.events.deflation_swaps > 0);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let m = path_laplacian(60);
        let cfg = SolverConfig::exact(3).with_seed(11).with_trajectory();
        assert_eq!(lanczos(&m, &cfg).unwrap(), lanczos(&m, &cfg).unwrap());
    }

    #[test]
    fn trajectory_has_one_iterate_per_cycle() {
        let m = path_laplacian(90);
        let r = lanczos(&m, &SolverConfig::exact(2).with_seed(1).with_trajectory()).unwrap();
        assert_eq!(r.trajectory.as_ref().unwrap().len(), r.iterations);
    }
}
