//! Discrete bundle-valued exterior calculus on embedded simplicial
//! complexes.
//!
//! The crate builds discrete connections from smooth connection 1-forms,
//! discretizes bundle-valued differential forms in parallel-propagated
//! frames, applies discrete covariant exterior derivatives and curvature
//! operators that satisfy the Bianchi identities exactly, and ships a
//! harness reproducing the mesh-refinement convergence orders of those
//! operators.

pub mod bundle;
pub mod calculus;
pub mod error;
pub mod forms;
pub mod harness;
pub mod simplicial;
pub mod smoothfields;

/// Dense square matrix over `f64`; ranks stay tiny (r <= 4).
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense vector over `f64`.
pub type Vector = nalgebra::DVector<f64>;
/// Point in the ambient embedding space.
pub type Point = nalgebra::DVector<f64>;

pub use error::{CovexError, Result};
