//! Dense helpers and the structured solver for collocation Newton systems.

mod abd;
mod band;
mod dense;

pub use abd::{AbdLayout, AbdLu, AbdMatrix, BcBlock, IntervalBlock, NodeBlock};
pub use dense::DMat;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    /// A pivot fell below `1e-14` times its row norm. `block` is the mesh
    /// node (or interval) owning the offending unknown.
    #[error("numerically singular matrix at block {block}")]
    Singular { block: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
}
