//! Dataset handling, baselines and the benchmark runner behind the `s3vm`
//! binary.

pub mod baseline;
pub mod bench;
pub mod cv;
pub mod dataset;
pub mod error;
pub mod synth;

pub use bench::{run_benchmark, run_bounds, run_sweep, Report, RunConfig};
pub use dataset::{accuracy, load_csv, mask_labels, standardize, Dataset};
pub use error::{HarnessError, Result};
