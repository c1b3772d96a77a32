//! Sparse symmetric storage and a direct envelope (skyline) Cholesky solver.

mod cholesky;
mod sparse;

pub use cholesky::{EnvelopeCholesky, Symbolic};
pub use sparse::CsrMatrix;
