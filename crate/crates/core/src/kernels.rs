use faer::Mat;

use crate::{Result, S3vmError};

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
    /// Rank-one `γγᵀ` from a ground-truth labeling; features are ignored.
    Ideal { truth: Vec<f64> },
}

impl KernelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Rbf { .. } => "rbf",
            KernelSpec::Ideal { .. } => "ideal",
        }
    }
}

pub fn default_gamma(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(S3vmError::InvalidInput("feature dimension must be >= 1".into()));
    }
    Ok(1.0 / d as f64)
}

/// Gram matrix of the rows of `features`.
pub fn gram_matrix(features: &Mat<f64>, spec: &KernelSpec) -> Result<Mat<f64>> {
    if let KernelSpec::Ideal { truth } = spec {
        if truth.len() != features.nrows() {
            return Err(S3vmError::Dimension {
                expected: features.nrows(),
                got: truth.len(),
            });
        }
        return ideal_gram(truth);
    }
    cross_gram(features, features, spec)
}

/// Kernel values between the rows of `a` and the rows of `b`.
pub fn cross_gram(a: &Mat<f64>, b: &Mat<f64>, spec: &KernelSpec) -> Result<Mat<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(S3vmError::InvalidInput("empty feature matrix".into()));
    }
    if a.ncols() != b.ncols() {
        return Err(S3vmError::Dimension {
            expected: a.ncols(),
            got: b.ncols(),
        });
    }
    for m in [a, b] {
        for j in 0..m.ncols() {
            if m.col_as_slice(j).iter().any(|v| !v.is_finite()) {
                return Err(S3vmError::InvalidInput("non-finite feature value".into()));
            }
        }
    }
    let inner = a * b.transpose();
    match spec {
        KernelSpec::Linear => Ok(inner),
        KernelSpec::Rbf { gamma } => {
            if !(*gamma > 0.0 && gamma.is_finite()) {
                return Err(S3vmError::InvalidInput(format!("rbf gamma must be positive, got {gamma}")));
            }
            let sq = |m: &Mat<f64>, i: usize| (0..m.ncols()).map(|k| m[(i, k)] * m[(i, k)]).sum::<f64>();
            let na: Vec<f64> = (0..a.nrows()).map(|i| sq(a, i)).collect();
            let nb: Vec<f64> = (0..b.nrows()).map(|i| sq(b, i)).collect();
            Ok(Mat::from_fn(a.nrows(), b.nrows(), |i, j| {
                let d2 = (na[i] + nb[j] - 2.0 * inner[(i, j)]).max(0.0);
                (-gamma * d2).exp()
            }))
        }
        KernelSpec::Ideal { .. } => Err(S3vmError::InvalidInput(
            "the ideal kernel has no cross evaluation".into(),
        )),
    }
}

pub fn ideal_gram(truth: &[f64]) -> Result<Mat<f64>> {
    if let Some(&bad) = truth.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(S3vmError::InvalidLabel(bad));
    }
    let n = truth.len();
    Ok(Mat::from_fn(n, n, |i, j| truth[i] * truth[j]))
}
