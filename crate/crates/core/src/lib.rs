//! Exact solver for semi-supervised SVMs.
//!
//! The labeling problem is written as the non-convex QCQP
//! `min xᵀCx` with `y_i x_i >= 1` on labeled points, `x_i² >= 1` on
//! unlabeled points and an optional balancing equality. Lower bounds come from
//! SDP relaxations strengthened with RLT cuts and bound tightening; upper
//! bounds from rounding plus a two-opt local search.

pub mod bnc;
pub mod error;
pub mod heuristic;
pub mod kernels;
pub mod problem;
pub mod relaxations;
pub mod svm;
pub mod tightening;

pub use bnc::{solve, BncNode, SolveParams, SolveReport, SolveStatus};
pub use error::S3vmError;
pub use kernels::{default_gamma, gram_matrix, ideal_gram, KernelSpec};
pub use problem::{
    assemble_problem, check_feasible, objective, percentage_gap, BoxBounds, Incumbent, Labeling,
    ProblemData,
};

pub type Result<T> = std::result::Result<T, S3vmError>;
