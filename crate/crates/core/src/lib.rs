//! Ultrametric graphons and hierarchical community networks.
//!
//! This crate builds graphons `W(x, y) = w(d(x, y))` where `d` is an
//! ultrametric on `[0, 1]` induced by a rooted tree of nested interval
//! partitions and `w` is a kernel mapping tree heights to connection
//! probabilities. Graphs sampled from such a graphon carry nested
//! community structure, and their deterministic Laplacians have fully
//! explicit spectra: one eigenvalue per tree node, with eigenprojectors
//! that are block-constant over the node's children.
//!
//! The main pieces:
//!
//! * [`tree`] - nested interval partitions of `[0, 1]` as a rooted tree
//!   with exact rational endpoints, heights, LCA queries, and seeded
//!   random binary trees with Beta-distributed splits.
//! * [`graphon`] - kernels, graphon evaluation, one-level (single-split)
//!   variants, budgeted intervention transforms, and the telescoping
//!   degree densities `nu(I)`.
//! * [`sample`] - the exact LCM sampling grid, deterministic and random
//!   adjacency matrices, and their Laplacians.
//! * [`spectral`] - closed-form eigenvalues/projectors, a dense
//!   symmetric eigensolver front end, and spectral convergence
//!   experiments.
//! * [`detect`] - community detection from the sign structure of
//!   empirical spectral projectors.
//! * [`threshold`] - the detectability threshold `p*` for one-level
//!   graphons, Fiedler-matrix support classification, and Cheeger
//!   bounds (see [`cheeger`]).
//! * [`randomwalk`] - Laplacian pseudo-inverses, hitting/commute times
//!   of the associated CTMC, and the commute-time collapse experiment.
//! * [`sis`] - SIS dynamics on sampled networks, spectral threshold
//!   checks, degree-density stability bounds, and intervention sweeps.
//! * [`fixtures`] - named reference models used by the experiment
//!   harness and the test suite.

// Validations reject NaN by negating the healthy comparison (`!(x > 0.0)`),
// which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cheeger;
pub mod config;
pub mod detect;
mod error;
pub mod fixtures;
pub mod graphon;
pub mod randomwalk;
pub mod rng;
pub mod sample;
pub mod sis;
pub mod spectral;
pub mod threshold;
pub mod tree;

pub use error::Error;

// Matrices appear throughout the public API; re-export the backend so
// downstream crates name the same types without a separate dependency.
pub use nalgebra;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
