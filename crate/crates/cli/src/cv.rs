//! Stratified k-fold selection of the kernel and `C_l` on labeled points.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use s3vm_core::KernelSpec;

use crate::baseline::fit_predict;
use crate::dataset::Dataset;
use crate::error::{HarnessError, Result};

const MAX_DRAWS: usize = 10;

/// `{10^(i/10) : i = -10..=10}`.
pub fn default_cl_grid() -> Vec<f64> {
    (-10..=10).map(|i| 10f64.powf(i as f64 / 10.0)).collect()
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub kernel: KernelSpec,
    pub c_l: f64,
    /// Mean validation accuracy in percent.
    pub score: f64,
    /// Validation folds as row indices of the dataset.
    pub folds: Vec<Vec<usize>>,
}

/// Deals each class round-robin into `k` folds after a shuffle. Returns
/// `None` when some training complement misses a class.
fn draw_folds(idx: &[usize], y: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Vec<usize>>> {
    let mut folds = vec![Vec::new(); k];
    let mut slot = 0;
    for class in [1.0, -1.0] {
        let mut members: Vec<usize> = idx.iter().zip(y).filter(|(_, &v)| v == class).map(|(&i, _)| i).collect();
        members.shuffle(rng);
        for i in members {
            folds[slot % k].push(i);
            slot += 1;
        }
    }
    let ok = folds.iter().all(|f| {
        !f.is_empty()
            && [1.0, -1.0].iter().all(|&c| {
                idx.iter().zip(y).any(|(i, &v)| v == c && !f.contains(i))
            })
    });
    ok.then_some(folds)
}

/// Picks `(kernel, C_l)` maximizing mean fold accuracy. Ties go to the smaller
/// `C_l`, then to the earlier kernel in `kernels`.
pub fn cross_validate(d: &Dataset, grid: &[f64], kernels: &[KernelSpec], k: usize, seed: u64) -> Result<CvResult> {
    if grid.is_empty() || kernels.is_empty() {
        return Err(HarnessError::CrossValidation("empty grid".into()));
    }
    let idx = d.labeled_indices();
    if k < 2 || idx.len() < k {
        return Err(HarnessError::CrossValidation(format!(
            "{} labeled points cannot form {k} folds",
            idx.len()
        )));
    }
    let y: Vec<f64> = idx
        .iter()
        .map(|&i| d.labels[i].ok_or(HarnessError::NoTruth("a labeled row")))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let folds = (0..MAX_DRAWS)
        .find_map(|_| draw_folds(&idx, &y, k, &mut rng))
        .ok_or_else(|| HarnessError::CrossValidation(format!("no valid {k}-fold split after {MAX_DRAWS} draws")))?;

    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64, KernelSpec)> = None;
    for &c in &grid {
        for kernel in kernels {
            let mut total = 0.0;
            for fold in &folds {
                let train: Vec<usize> = idx.iter().copied().filter(|i| !fold.contains(i)).collect();
                let train_y: Vec<f64> = train.iter().map(|&i| d.labels[i].unwrap()).collect();
                let pred = fit_predict(&d.rows(&train), &train_y, &d.rows(fold), kernel, c)?;
                let hits = fold.iter().zip(&pred).filter(|(&i, &p)| d.labels[i] == Some(p)).count();
                total += hits as f64 / fold.len() as f64;
            }
            let score = 100.0 * total / folds.len() as f64;
            if best.as_ref().is_none_or(|b| score > b.0 + 1e-9) {
                best = Some((score, c, kernel.clone()));
            }
        }
    }
    let (score, c_l, kernel) = best.expect("grid is non-empty");
    Ok(CvResult {
        kernel,
        c_l,
        score,
        folds,
    })
}
