//! Supervised L2-SVM used for the baseline labeling and the initial incumbent.

use faer::Mat;
use s3vm_conic::{solve_qp, QpModel, QpSettings, Status};

use crate::problem::{Labeling, ProblemData};
use crate::{Result, S3vmError};

/// Dual coefficients of `max eᵀα - ½αᵀ(K_l ∘ yyᵀ)α, α >= 0`, where
/// `k_reg` already includes the `I / (2 C_l)` term.
pub fn l2_svm_dual(k_reg: &Mat<f64>, labels: &[f64]) -> Result<Vec<f64>> {
    let l = labels.len();
    if k_reg.nrows() != l || k_reg.ncols() != l {
        return Err(S3vmError::Dimension {
            expected: l,
            got: k_reg.nrows(),
        });
    }
    let quad = Mat::from_fn(l, l, |i, j| 0.5 * k_reg[(i, j)] * labels[i] * labels[j]);
    let mut model = QpModel::new(quad, vec![-1.0; l]);
    model.lower = vec![0.0; l];
    let sol = solve_qp(&model, &QpSettings::default())?;
    if sol.status != Status::Optimal {
        return Err(S3vmError::Solver(format!("svm dual ended with {:?}", sol.status)));
    }
    Ok(sol.x.into_iter().map(|a| a.max(0.0)).collect())
}

/// `Σ_j α_j y_j k(x_j, x)` for each column of `cross` (rows = training points).
pub fn decision_values(alpha: &[f64], labels: &[f64], cross: &Mat<f64>) -> Vec<f64> {
    (0..cross.ncols())
        .map(|c| {
            alpha
                .iter()
                .zip(labels)
                .enumerate()
                .map(|(j, (a, y))| a * y * cross[(j, c)])
                .sum()
        })
        .collect()
}

pub fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Labels the unlabeled points with the supervised SVM trained on the
/// labeled block of `K = gram + D`.
pub fn supervised_labeling(p: &ProblemData) -> Result<Labeling> {
    let (n, l) = (p.n(), p.l());
    let k = p.kernel();
    let k_reg = Mat::from_fn(l, l, |i, j| k[(i, j)]);
    let alpha = l2_svm_dual(&k_reg, p.labels())?;
    let cross = Mat::from_fn(l, n - l, |i, j| k[(i, l + j)]);
    let mut values = p.labels().to_vec();
    values.extend(decision_values(&alpha, p.labels(), &cross).into_iter().map(sign));
    Labeling::new(values, l)
}
