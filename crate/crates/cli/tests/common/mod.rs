#![allow(dead_code)]

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use s3vm_core::{assemble_problem, default_gamma, gram_matrix, KernelSpec, ProblemData};

/// Two overlapping Gaussian blobs with an RBF kernel; the first `l` rows are
/// labeled and alternate between the classes.
pub fn blob_problem(seed: u64, n: usize, l: usize, balancing: bool) -> ProblemData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut truth: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    for i in (l + 1..n).rev() {
        let j = rng.random_range(l..=i);
        truth.swap(i, j);
    }
    let features = Mat::from_fn(n, 2, |i, k| {
        let shift = if k == 0 { 1.2 * truth[i] } else { 0.0 };
        shift + rng.sample::<f64, _>(StandardNormal)
    });
    let gram = gram_matrix(&features, &KernelSpec::Rbf { gamma: default_gamma(2).unwrap() }).unwrap();
    let c_u = 0.2 * (l as f64 / (n - l) as f64);
    assemble_problem(&gram, &truth[..l], 1.0, c_u, balancing).unwrap()
}

/// Optimal value and point for a fixed labeling, by coordinate ascent on the
/// dual `max Σμ + νr - ½wᵀKw` with `w = ȳ∘μ + νa` and `x = Kw`. `None` when
/// the balancing row cannot hold under `ybar`.
pub fn labeling_value(p: &ProblemData, ybar: &[f64]) -> Option<(f64, Vec<f64>)> {
    let (n, l) = (p.n(), p.l());
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
    let aka: f64 = a.iter().zip(&ka).map(|(x, y)| x * y).sum();
    let mut mu = vec![0.0; n];
    let mut nu = 0.0;
    let mut g = vec![0.0; n];
    for _ in 0..200_000 {
        let mut change: f64 = 0.0;
        for i in 0..n {
            let new = (mu[i] + (1.0 - ybar[i] * g[i]) / k[(i, i)]).max(0.0);
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
            let d = (r - a.iter().zip(&g).map(|(x, y)| x * y).sum::<f64>()) / aka;
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
    let w: Vec<f64> = (0..n).map(|i| ybar[i] * mu[i] + nu * a[i]).collect();
    let quad: f64 = w.iter().zip(&g).map(|(x, y)| x * y).sum();
    let dual = mu.iter().sum::<f64>() + if bal { nu * r } else { 0.0 } - 0.5 * quad;
    Some((dual, g))
}

/// Every feasible labeling with its value and point.
pub fn enumerate(p: &ProblemData) -> Vec<(Vec<f64>, f64, Vec<f64>)> {
    let (n, l) = (p.n(), p.l());
    (0u32..1 << (n - l))
        .filter_map(|mask| {
            let mut y = p.labels().to_vec();
            y.extend((0..n - l).map(|k| if mask >> k & 1 == 1 { 1.0 } else { -1.0 }));
            labeling_value(p, &y).map(|(v, x)| (y, v, x))
        })
        .collect()
}

pub fn brute_force(p: &ProblemData) -> Option<(f64, Vec<f64>)> {
    enumerate(p)
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(_, v, x)| (v, x))
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}
