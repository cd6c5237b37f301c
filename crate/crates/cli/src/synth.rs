//! Synthetic instances: two interleaved half-moons, two Gaussian blobs and a
//! three-cluster layout where balancing decides the outcome.

use std::f64::consts::PI;

use faer::Mat;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{HarnessError, Result};

fn shuffled(name: &str, pts: Vec<([f64; 2], f64)>, rng: &mut ChaCha8Rng) -> Dataset {
    let mut pts = pts;
    pts.shuffle(rng);
    let features = Mat::from_fn(pts.len(), 2, |i, j| pts[i].0[j]);
    Dataset::new(name, features, pts.iter().map(|p| Some(p.1)).collect())
}

/// Outer moon labeled +1, inner moon -1, Gaussian noise of scale `noise`.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outer = n.div_ceil(2);
    let inner = n - outer;
    let mut pts = Vec::with_capacity(n);
    let step = |count: usize, k: usize| if count > 1 { PI * k as f64 / (count - 1) as f64 } else { 0.0 };
    for k in 0..outer {
        let t = step(outer, k);
        pts.push(([t.cos(), t.sin()], 1.0));
    }
    for k in 0..inner {
        let t = step(inner, k);
        pts.push(([1.0 - t.cos(), 0.5 - t.sin()], -1.0));
    }
    for p in &mut pts {
        p.0[0] += noise * rng.sample::<f64, _>(StandardNormal);
        p.0[1] += noise * rng.sample::<f64, _>(StandardNormal);
    }
    shuffled("two_moons", pts, &mut rng)
}

/// Two isotropic unit-variance blobs with centers `±separation/2` on the
/// first axis, classes of equal size.
pub fn gaussian_blobs(n: usize, separation: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = (0..n)
        .map(|i| {
            let y = if i % 2 == 0 { 1.0 } else { -1.0 };
            let x0 = y * separation / 2.0 + rng.sample::<f64, _>(StandardNormal);
            let x1: f64 = rng.sample(StandardNormal);
            ([x0, x1], y)
        })
        .collect();
    shuffled("gaussian_blobs", pts, &mut rng)
}

/// Three horizontal clusters of 50 points in total: a +1 cluster on the left,
/// a -1 cluster in the middle and a -1 cluster on the right. Only points of
/// the outer clusters carry labels, so the middle cluster sits closer to the
/// +1 labels than to the -1 labels. With a narrow RBF kernel (`γ ≈ 5`) the
/// unconstrained optimum labels the middle cluster +1, the balanced one -1.
pub fn three_clusters(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cluster = |cx: f64, count: usize, y: f64| -> Vec<([f64; 2], f64)> {
        (0..count)
            .map(|_| {
                let x = cx + 0.35 * rng.sample::<f64, _>(StandardNormal);
                let h = 0.35 * rng.sample::<f64, _>(StandardNormal);
                ([x, h], y)
            })
            .collect()
    };
    let mut pts = cluster(0.0, 20, 1.0);
    pts.extend(cluster(2.6, 20, -1.0));
    pts.extend(cluster(7.0, 10, -1.0));
    let features = Mat::from_fn(pts.len(), 2, |i, j| pts[i].0[j]);
    let mut d = Dataset::new("three_clusters", features, pts.iter().map(|p| Some(p.1)).collect());
    // Two labels on the left cluster, three on the right one.
    d.labeled_mask = (0..50).map(|i| i < 2 || (40..43).contains(&i)).collect();
    d.seed = seed;
    d
}

/// `two_moons`, `gaussian_blobs` (alias `blobs`) or `three_clusters`.
pub fn by_name(name: &str, n: usize, seed: u64) -> Result<Dataset> {
    match name {
        "two_moons" | "2moons" | "moons" => Ok(two_moons(n, 0.1, seed)),
        "gaussian_blobs" | "blobs" => Ok(gaussian_blobs(n, 3.0, seed)),
        "three_clusters" | "figure1" => Ok(three_clusters(seed)),
        other => Err(HarnessError::UnknownSynthetic(other.to_string())),
    }
}
