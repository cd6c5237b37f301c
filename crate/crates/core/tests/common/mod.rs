#![allow(dead_code)]

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use s3vm_core::{assemble_problem, default_gamma, gram_matrix, KernelSpec, ProblemData};

pub struct Instance {
    pub problem: ProblemData,
    pub truth: Vec<f64>,
    pub features: Mat<f64>,
}

/// Two Gaussian blobs in 2-D; the first `l` points are labeled, balanced
/// between classes as far as possible.
pub fn blob_instance(seed: u64, n: usize, l: usize, balancing: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 2;
    let mut truth: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    // Shuffle the unlabeled part so classes are not interleaved trivially.
    for i in (l + 1..n).rev() {
        let j = rng.random_range(l..=i);
        truth.swap(i, j);
    }
    let features = Mat::from_fn(n, d, |i, k| {
        let shift = if k == 0 { 1.2 * truth[i] } else { 0.0 };
        shift + rng.sample::<f64, _>(StandardNormal)
    });
    let gram = gram_matrix(&features, &KernelSpec::Rbf { gamma: default_gamma(d).unwrap() }).unwrap();
    let c_l = 1.0;
    let c_u = 0.2 * (l as f64 / (n - l) as f64) * c_l;
    let problem = assemble_problem(&gram, &truth[..l], c_l, c_u, balancing).unwrap();
    Instance {
        problem,
        truth,
        features,
    }
}

/// `min xᵀCx` over `ȳ_i x_i >= 1` and the balancing row, via coordinate
/// ascent on the dual `max Σμ + νr - ½wᵀKw`, `w = ȳ∘μ + ν a`, `x = Kw`.
/// Returns `None` for labelings where balancing is unattainable.
pub fn labeling_value(p: &ProblemData, ybar: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = p.n();
    let l = p.l();
    let k = p.kernel();
    let bal = p.balancing_enabled();
    let r = p.balancing_rhs();
    if bal {
        let u = &ybar[l..];
        if u.iter().all(|&v| v > 0.0) && r < 1.0 || u.iter().all(|&v| v < 0.0) && r > -1.0 {
            return None;
        }
    }
    let m = (n - l) as f64;
    let a: Vec<f64> = (0..n).map(|i| if i >= l { 1.0 / m } else { 0.0 }).collect();
    let ka: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[(i, j)] * a[j]).sum()).collect();
    let aka: f64 = (0..n).map(|i| a[i] * ka[i]).sum();
    let mut mu = vec![0.0; n];
    let mut nu = 0.0;
    let mut g = vec![0.0; n]; // K w
    for _sweep in 0..200_000 {
        let mut change: f64 = 0.0;
        for i in 0..n {
            let step = (1.0 - ybar[i] * g[i]) / k[(i, i)];
            let new = (mu[i] + step).max(0.0);
            let d = new - mu[i];
            if d != 0.0 {
                mu[i] = new;
                for j in 0..n {
                    g[j] += k[(j, i)] * ybar[i] * d;
                }
                change = change.max(d.abs());
            }
        }
        if bal {
            let act: f64 = (0..n).map(|i| a[i] * g[i]).sum();
            let d = (r - act) / aka;
            nu += d;
            for j in 0..n {
                g[j] += ka[j] * d;
            }
            change = change.max(d.abs());
        }
        if change < 1e-13 {
            break;
        }
    }
    let x = g;
    let w: Vec<f64> = (0..n).map(|i| ybar[i] * mu[i] + nu * a[i]).collect();
    let dual = mu.iter().sum::<f64>() + if bal { nu * r } else { 0.0 } - 0.5 * dot(&w, &x);
    Some((dual, x))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimum over all labelings of the unlabeled points.
pub fn brute_force(p: &ProblemData) -> Option<(f64, Vec<f64>)> {
    let (n, l) = (p.n(), p.l());
    let u = n - l;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << u) {
        let mut ybar = p.labels().to_vec();
        ybar.extend((0..u).map(|k| if mask >> k & 1 == 1 { 1.0 } else { -1.0 }));
        if let Some((v, x)) = labeling_value(p, &ybar) {
            if best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, x));
            }
        }
    }
    best
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}
