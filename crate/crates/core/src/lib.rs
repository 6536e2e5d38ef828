//! Exact-rational homotopy transfer for differential graded Lie algebras.
//!
//! Given a finite-dimensional DGLA `(L, d, [.,.])` over the rationals and a
//! splitting `eta` of its differential, this crate computes the minimal
//! L-infinity structure `mu` induced on the cohomology `H`, the structure
//! maps `f: H -> L` and `g: F -> L` embedding both summands, the resulting
//! decomposition `L ~ (H, mu) (+) (F, d)` with its recursively constructed
//! inverse, the Kuranishi map, and certified convergence bounds for the
//! transferred structure in finite-dimensional normed models. All arithmetic
//! is exact.

pub mod bounds;
pub mod coalgebra;
pub mod corpus;
pub mod error;
pub mod graded;
pub mod linalg;
pub mod multimap;
pub mod scalar;
pub mod sign;
pub mod transfer;
pub mod tree;

pub use error::{Error, Result};
pub use graded::{GradedSpace, LinearMap, SparseVec};
pub use multimap::{Flavor, MultiMap, SignRule};
pub use scalar::Scalar;
pub use sign::Permutation;
pub use tree::{OrientedTree, RamPath};
