use std::path::Path;

use faer::Mat;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{HarnessError, Result};

/// Feature matrix, known labels and the mask of labels the solver may see.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub features: Mat<f64>,
    /// Known label per row (`None` for rows without one).
    pub labels: Vec<Option<f64>>,
    pub labeled_mask: Vec<bool>,
    pub seed: u64,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Mat<f64>, labels: Vec<Option<f64>>) -> Self {
        let labeled_mask = labels.iter().map(Option::is_some).collect();
        Self {
            name: name.into(),
            features,
            labels,
            labeled_mask,
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Full ground truth, when every row has a known label.
    pub fn truth(&self) -> Option<Vec<f64>> {
        self.labels.iter().copied().collect()
    }

    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labeled_mask[i]).collect()
    }

    pub fn unlabeled_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.labeled_mask[i]).collect()
    }

    /// Labeled rows first, then unlabeled rows, each in original order.
    pub fn solver_order(&self) -> Vec<usize> {
        let mut order = self.labeled_indices();
        order.extend(self.unlabeled_indices());
        order
    }

    pub fn rows(&self, idx: &[usize]) -> Mat<f64> {
        Mat::from_fn(idx.len(), self.dim(), |i, j| self.features[(idx[i], j)])
    }
}

fn parse_label(raw: &str) -> std::result::Result<Option<f64>, String> {
    match raw.trim() {
        "" | "?" => Ok(None),
        "+1" | "1" | "1.0" => Ok(Some(1.0)),
        "-1" | "-1.0" => Ok(Some(-1.0)),
        other => Err(format!("label must be +1, -1, ? or empty, got {other:?}")),
    }
}

/// Reads one sample per row. The label column defaults to the last one; a
/// first row that does not parse as numbers is taken as a header.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (k, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = k + 1;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(HarnessError::Parse {
                line,
                message: format!("expected {w} columns, found {}", rec.len()),
            });
        }
        let lc = label_column.unwrap_or(w - 1);
        if lc >= w || w < 2 {
            return Err(HarnessError::Parse {
                line,
                message: format!("label column {lc} outside {w} columns"),
            });
        }
        let mut feats = Vec::with_capacity(w - 1);
        let mut header = false;
        for (c, field) in rec.iter().enumerate() {
            if c == lc {
                continue;
            }
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => feats.push(v),
                Ok(_) => {
                    return Err(HarnessError::Parse {
                        line,
                        message: format!("non-finite value in column {c}"),
                    })
                }
                Err(_) if rows.is_empty() && labels.is_empty() => header = true,
                Err(e) => {
                    return Err(HarnessError::Parse {
                        line,
                        message: format!("column {c}: {e}"),
                    })
                }
            }
        }
        let first = rows.is_empty() && labels.is_empty();
        if header || (first && parse_label(&rec[lc]).is_err()) {
            continue;
        }
        let label = parse_label(&rec[lc]).map_err(|message| HarnessError::Parse { line, message })?;
        rows.push(feats);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(HarnessError::Empty);
    }
    let d = rows[0].len();
    let features = Mat::from_fn(rows.len(), d, |i, j| rows[i][j]);
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into());
    Ok(Dataset::new(name, features, labels))
}

/// Zero mean and unit sample standard deviation per column; constant
/// columns become zero.
pub fn standardize(features: &Mat<f64>) -> Mat<f64> {
    let (n, d) = (features.nrows(), features.ncols());
    let mut out = features.clone();
    if n < 2 {
        return out;
    }
    for j in 0..d {
        let col = features.col_as_slice(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        let constant = sd <= 1e-12 * mean.abs().max(1.0);
        for i in 0..n {
            out[(i, j)] = if constant { 0.0 } else { (col[i] - mean) / sd };
        }
    }
    out
}

/// Stratified random mask: `round(p · |class|)` labeled points per class.
pub fn mask_labels(d: &Dataset, p: f64, seed: u64) -> Result<Dataset> {
    if !(p > 0.0 && p < 1.0) {
        return Err(HarnessError::Config(format!("labeled fraction must be in (0, 1), got {p}")));
    }
    let truth = d.truth().ok_or(HarnessError::NoTruth("label masking"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![false; d.len()];
    for class in [1.0, -1.0] {
        let mut members: Vec<usize> = (0..d.len()).filter(|&i| truth[i] == class).collect();
        let take = (p * members.len() as f64).round() as usize;
        if take == 0 {
            return Err(HarnessError::EmptyClass { class });
        }
        members.shuffle(&mut rng);
        for &i in &members[..take] {
            mask[i] = true;
        }
    }
    Ok(Dataset {
        labeled_mask: mask,
        seed,
        ..d.clone()
    })
}

/// Percentage of correctly labeled points among the unlabeled ones, `None`
/// when there are none.
pub fn accuracy(pred: &[f64], truth: &[f64], mask: &[bool]) -> Option<f64> {
    let idx: Vec<usize> = (0..pred.len()).filter(|&i| !mask[i]).collect();
    if idx.is_empty() {
        return None;
    }
    let correct = idx.iter().filter(|&&i| pred[i] == truth[i]).count();
    Some(100.0 * correct as f64 / idx.len() as f64)
}
