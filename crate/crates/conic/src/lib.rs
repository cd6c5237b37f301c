//! Interior-point backends for the two convex subproblem classes used by the
//! branch-and-cut: linear SDPs over a single PSD block and convex QPs with at
//! most one quadratic constraint.

mod dense;
pub mod qp;
pub mod sdp;

pub use qp::{solve_qp, LinearRow, QpModel, QpSettings, QpSolution, QuadCutoff};
pub use sdp::{solve_sdp, RowId, SdpModel, SdpRow, SdpSettings, SdpSolution};

use thiserror::Error;

/// Constraint sense for a linear row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `a·x >= rhs`
    Ge,
    /// `a·x <= rhs`
    Le,
    /// `a·x == rhs`
    Eq,
}

/// Outcome of an interior-point solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("row {row} references entry ({r}, {c}) outside a block of dimension {dim}")]
    EntryOutOfRange { row: usize, r: usize, c: usize, dim: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite data in {0}")]
    NonFinite(&'static str),
    #[error("quadratic objective is unbounded below without a cutoff constraint")]
    Unbounded,
}
