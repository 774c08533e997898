//! Finite-dimensional quantum state spaces.
//!
//! * [`kernel`]: dense complex matrices, Hermitian eigensystems, tensor
//!   products and partial traces.
//! * [`state_space`]: validated state operators, faces as projections,
//!   extremality and convex-component analysis.
//! * [`preparation`]: preparation trees recording statistical
//!   decompositions, which the state operator alone does not determine.
//! * [`properties`]: simple properties as predicates on states, their
//!   Boolean lattice, and the non-distributive projection lattice.
//! * [`measurement`]: Born-rule sampling, CHSH, and the comparison between
//!   an improper mixture and a gemenge with the same local state.

pub mod error;
pub mod kernel;
pub mod measurement;
pub mod preparation;
pub mod properties;
pub mod random;
pub mod state_space;

pub use error::{Error, Result};
pub use kernel::{DenseMatrix, HermitianEigensystem, Subsystem};
pub use measurement::{ChshConfig, EnsembleReport, Observable};
pub use preparation::{LeafDecomposition, PreparationNode};
pub use properties::{PropertyExpr, SimpleProperty};
pub use state_space::{ComponentReport, FaceHandle, StateOperator};
