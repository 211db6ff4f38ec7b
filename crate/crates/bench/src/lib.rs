//! Fixtures shared by the criterion benchmarks under `benches/`.
//!
//! The sweep that reports median timings and speedups is `slpe bench`; these
//! benchmarks track the kernels and solvers between changes.

use slpe::supra::{build_supra_laplacian, layer_laplacians};
use slpe::{generate_ba_temporal, CsrMatrix, Result, SupraOptions};

/// Edges per new node of the synthetic graphs.
pub const BA_M: usize = 3;

/// Supra-Laplacian of a `layers`-layer Barabasi-Albert graph on `n` nodes.
pub fn supra_instance(n: usize, layers: usize, seed: u64) -> Result<CsrMatrix> {
    let g = generate_ba_temporal(n, BA_M, layers, seed)?;
    Ok(build_supra_laplacian(&g, &SupraOptions::default())?.matrix)
}

/// Laplacian of one Barabasi-Albert layer on `n` nodes.
pub fn layer_instance(n: usize, seed: u64) -> Result<CsrMatrix> {
    let g = generate_ba_temporal(n, BA_M, 1, seed)?;
    let mut layers = layer_laplacians(&g, &SupraOptions::default())?;
    Ok(layers.remove(0).matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_have_the_expected_shape() {
        let m = supra_instance(50, 3, 1).unwrap();
        assert_eq!(m.dim(), 150);
        assert!(m.is_symmetric());
        assert_eq!(layer_instance(50, 1).unwrap().dim(), 50);
    }
}
