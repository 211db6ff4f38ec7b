//! Contiguous orthonormal basis with cache-blocked Gram-Schmidt kernels.

use std::ops::Range;

use nalgebra::{DMatrix, DMatrixView};

use super::{axpy, dot};

/// Rows per block; one block of a 200-vector basis stays within L2.
const BLOCK: usize = 256;

/// `n x len` column-major storage with room for `cap` columns.
pub(crate) struct Basis {
    n: usize,
    len: usize,
    data: Vec<f64>,
}

impl Basis {
    pub(crate) fn with_capacity(n: usize, cap: usize) -> Self {
        Basis {
            n,
            len: 0,
            data: Vec::with_capacity(n * cap),
        }
    }

    pub(crate) fn from_columns(n: usize, cols: &[Vec<f64>]) -> Self {
        let mut b = Basis::with_capacity(n, cols.len());
        for c in cols {
            b.push(c);
        }
        b
    }

    /// Takes the columns of `m`, reserving room for `cap` columns in total.
    pub(crate) fn from_matrix(m: &DMatrix<f64>, cap: usize) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * cap.max(m.ncols()));
        data.extend_from_slice(m.as_slice());
        Basis {
            n: m.nrows(),
            len: m.ncols(),
            data,
        }
    }

    pub(crate) fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub(crate) fn push(&mut self, v: &[f64]) {
        debug_assert_eq!(v.len(), self.n);
        self.data.extend_from_slice(v);
        self.len += 1;
    }

    /// `Vᵀ w` accumulated block by block.
    fn coefficients(&self, w: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for start in (0..self.n).step_by(BLOCK) {
            let end = (start + BLOCK).min(self.n);
            let wb = &w[start..end];
            for (j, o) in out.iter_mut().enumerate() {
                *o += dot(&self.col(j)[start..end], wb);
            }
        }
    }

    /// Two classical Gram-Schmidt passes removing `span(V)` from `w`; the
    /// first update and the second pass's inner products share one sweep
    /// over `V`. Returns the total coefficients `Vᵀ w` of the original `w`.
    pub(crate) fn cgs2(&self, w: &mut [f64]) -> Vec<f64> {
        let k = self.len;
        if k == 0 {
            return Vec::new();
        }
        let mut c1 = vec![0.0; k];
        let mut c2 = vec![0.0; k];
        self.coefficients(w, &mut c1);
        for start in (0..self.n).step_by(BLOCK) {
            let end = (start + BLOCK).min(self.n);
            let wb = &mut w[start..end];
            for (j, &c) in c1.iter().enumerate() {
                axpy(-c, &self.col(j)[start..end], wb);
            }
            for (j, o) in c2.iter_mut().enumerate() {
                *o += dot(&self.col(j)[start..end], wb);
            }
        }
        self.subtract(&c2, w);
        c1.iter().zip(&c2).map(|(a, b)| a + b).collect()
    }

    /// Orthogonalizes `w` first against the columns in `local`, where all of
    /// its large components are known to lie, then once against the whole
    /// basis. A further full pass runs only if the full pass removed a
    /// sizeable part of the norm. Returns the total coefficients.
    pub(crate) fn local_then_full(&self, w: &mut [f64], local: Range<usize>) -> Vec<f64> {
        let mut total = vec![0.0; self.len];
        for j in local {
            let c = dot(self.col(j), w);
            axpy(-c, self.col(j), w);
            total[j] += c;
        }
        let mut c = vec![0.0; self.len];
        for _ in 0..2 {
            let before = dot(w, w);
            self.coefficients(w, &mut c);
            self.subtract(&c, w);
            total.iter_mut().zip(&c).for_each(|(t, x)| *t += x);
            if dot(w, w) > 0.25 * before {
                break;
            }
        }
        total
    }

    /// `w -= V c`.
    fn subtract(&self, c: &[f64], w: &mut [f64]) {
        for start in (0..self.n).step_by(BLOCK) {
            let end = (start + BLOCK).min(self.n);
            let wb = &mut w[start..end];
            for (j, &cj) in c.iter().enumerate() {
                axpy(-cj, &self.col(j)[start..end], wb);
            }
        }
    }

    /// `V Y` for the leading `len` rows of `y`'s first `count` columns.
    pub(crate) fn combine(&self, y: &DMatrix<f64>, count: usize) -> DMatrix<f64> {
        let v = DMatrixView::from_slice(&self.data, self.n, self.len);
        v * y.view((0, 0), (self.len, count))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cgs2_removes_the_span() {
        let n = 600;
        let e = |k: usize| -> Vec<f64> { (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect() };
        let b = Basis::from_columns(n, &[e(3), e(300), e(599)]);
        let mut w: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let c = b.cgs2(&mut w);
        assert_eq!(c, vec![3.0, 300.0, 599.0]);
        assert_eq!((w[3], w[300], w[599], w[4]), (0.0, 0.0, 0.0, 4.0));
        let y = DMatrix::from_column_slice(
            4,
            3,
            &[1.0, 2.0, 0.0, 9.0, 0.0, 0.0, 1.0, 9.0, 5.0, 5.0, 5.0, 5.0],
        );
        let x = b.combine(&y, 2);
        assert_eq!(x.shape(), (n, 2));
        assert_eq!((x[(3, 0)], x[(300, 0)], x[(599, 1)]), (1.0, 2.0, 1.0));

        let mut w: Vec<f64> = (0..n).map(|i| (i % 7) as f64).collect();
        let c = b.local_then_full(&mut w, 1..2);
        assert_eq!(c, vec![3.0, 6.0, 4.0]);
        assert_eq!((w[3], w[300], w[599]), (0.0, 0.0, 0.0));
    }
}
