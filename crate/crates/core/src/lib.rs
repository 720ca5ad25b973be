//! Topological feature tracking for time-varying scalar fields.
//!
//! Merge trees are built per time step, encoded as attributed measure
//! networks, and matched across steps with partial fused Gromov-Wasserstein
//! couplings computed by Frank-Wolfe. Couplings drive bijective trajectory
//! extraction and a probabilistic tracking graph.
//!
//! The numerical core ([`field`], [`mergetree`], [`network`], [`transport`])
//! is generic over [`Scalar`]; the pipeline layers ([`tracking`], [`eval`],
//! [`stability`], [`export`]) run in `f64`.

// NaN must fail the positivity checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod export;
pub mod field;
pub mod fixtures;
pub mod mergetree;
pub mod network;
pub mod scalar;
pub mod stability;
pub mod tracking;
pub mod transport;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar field sampled in `f64`.
pub type ScalarField64 = field::ScalarField<f64>;
/// Scalar field sampled in `f32`.
pub type ScalarField32 = field::ScalarField<f32>;
/// Merge tree with `f64` heights.
pub type MergeTree64 = mergetree::MergeTree<f64>;
/// Merge tree with `f32` heights.
pub type MergeTree32 = mergetree::MergeTree<f32>;
/// Measure network in `f64`.
pub type MeasureNetwork64 = network::MeasureNetwork<f64>;
/// Measure network in `f32`.
pub type MeasureNetwork32 = network::MeasureNetwork<f32>;
/// Partial coupling in `f64`.
pub type Coupling64 = transport::Coupling<f64>;
/// Solver output in `f64`.
pub type SolveReport64 = transport::SolveReport<f64>;
