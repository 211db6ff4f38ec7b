//! Laplacian positional encodings for discrete-time dynamic graphs.
//!
//! The pipeline runs from timestamped edge lists ([`temporal`]) through
//! supra-adjacency and supra-Laplacian assembly ([`supra`]) and sparse
//! symmetric eigensolvers ([`eigen`]) to positional-encoding tables
//! ([`encodings`]). [`smoothness`] and [`wl`] check the spectral smoothness
//! identity and the Supra-WL / Layer-WL expressiveness relation numerically;
//! [`bench`] times the solvers on synthetic preferential-attachment graphs.

pub mod bench;
pub mod eigen;
pub mod encodings;
pub mod error;
pub mod smoothness;
pub mod sparse;
pub mod supra;
pub mod temporal;
pub mod wl;

pub use bench::{generate_ba_temporal, run_bench, BenchReport, BenchSpec, Target};
pub use eigen::{EigenResult, Init, Method, SolverConfig};
pub use encodings::{
    compute_lpe, compute_slpe, concat_features, Approx, PeKind, PeOptions, PeTable, Variant,
};
pub use error::{Error, Result};
pub use smoothness::{check_minimality, evaluate_objective, SmoothnessReport};
pub use sparse::CsrMatrix;
pub use supra::{MatrixKind, SupraIndexMap, SupraMatrix, SupraOptions};
pub use temporal::{Snapshot, TemporalGraph, Window};
pub use wl::{
    distinguish, generate_counterexample, refine, refinement_check, ColorPartition, WlConfig,
    WlMode,
};
