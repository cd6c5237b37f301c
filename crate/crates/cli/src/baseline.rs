//! Supervised L2-SVM trained on the labeled points only.

use faer::Mat;
use s3vm_core::kernels::cross_gram;
use s3vm_core::svm::{decision_values, l2_svm_dual, sign};
use s3vm_core::KernelSpec;

use crate::dataset::{accuracy, Dataset};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone)]
pub struct BaselineResult {
    /// One label per row in original order; labeled rows keep their label.
    pub predictions: Vec<f64>,
    /// Accuracy on the unlabeled rows, when the truth is known.
    pub accuracy: Option<f64>,
}

/// Trains on `(train_x, train_y)` and returns `sign` of the zero-bias decision
/// function at every row of `test_x`.
pub fn fit_predict(train_x: &Mat<f64>, train_y: &[f64], test_x: &Mat<f64>, kernel: &KernelSpec, c_l: f64) -> Result<Vec<f64>> {
    if !(c_l > 0.0 && c_l.is_finite()) {
        return Err(HarnessError::Config(format!("C_l must be positive, got {c_l}")));
    }
    let mut k_reg = cross_gram(train_x, train_x, kernel)?;
    for i in 0..train_y.len() {
        k_reg[(i, i)] += 1.0 / (2.0 * c_l);
    }
    let alpha = l2_svm_dual(&k_reg, train_y)?;
    let cross = cross_gram(train_x, test_x, kernel)?;
    Ok(decision_values(&alpha, train_y, &cross).into_iter().map(sign).collect())
}

pub fn baseline_svm(d: &Dataset, kernel: &KernelSpec, c_l: f64) -> Result<BaselineResult> {
    let lab = d.labeled_indices();
    let train_y: Vec<f64> = lab
        .iter()
        .map(|&i| d.labels[i].ok_or(HarnessError::NoTruth("a labeled row")))
        .collect::<Result<_>>()?;
    for class in [1.0, -1.0] {
        if !train_y.contains(&class) {
            return Err(HarnessError::EmptyClass { class });
        }
    }
    let all: Vec<usize> = (0..d.len()).collect();
    let mut predictions = fit_predict(&d.rows(&lab), &train_y, &d.rows(&all), kernel, c_l)?;
    for (&i, &y) in lab.iter().zip(&train_y) {
        predictions[i] = y;
    }
    let accuracy = d
        .truth()
        .and_then(|t| accuracy(&predictions, &t, &d.labeled_mask));
    Ok(BaselineResult { predictions, accuracy })
}
