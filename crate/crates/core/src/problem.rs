use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::{Result, S3vmError};

/// Default absolute feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-6;

/// A full ±1 labeling whose first `labeled_count` entries are the given labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    values: Vec<f64>,
    labeled_count: usize,
}

impl Labeling {
    pub fn new(values: Vec<f64>, labeled_count: usize) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(S3vmError::InvalidLabel(bad));
        }
        if labeled_count > values.len() {
            return Err(S3vmError::Dimension {
                expected: values.len(),
                got: labeled_count,
            });
        }
        Ok(Self {
            values,
            labeled_count,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labeled_count(&self) -> usize {
        self.labeled_count
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn unlabeled(&self) -> &[f64] {
        &self.values[self.labeled_count..]
    }

    /// Flips an unlabeled entry.
    pub fn flip(&mut self, i: usize) {
        assert!(i >= self.labeled_count, "cannot flip a given label");
        self.values[i] = -self.values[i];
    }
}

/// Assembled instance `min xᵀCx` over the S3VM constraint set.
/// Points `0..l` are labeled, `l..n` unlabeled.
#[derive(Debug, Clone)]
pub struct ProblemData {
    n: usize,
    l: usize,
    cost: Mat<f64>,
    kernel: Mat<f64>,
    labels: Vec<f64>,
    balancing_rhs: f64,
    balancing_enabled: bool,
    penalties: (f64, f64),
}

impl ProblemData {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn unlabeled_count(&self) -> usize {
        self.n - self.l
    }

    /// `C = ½K⁻¹`.
    pub fn cost(&self) -> &Mat<f64> {
        &self.cost
    }

    /// `K = gram + D`.
    pub fn kernel(&self) -> &Mat<f64> {
        &self.kernel
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn balancing_rhs(&self) -> f64 {
        self.balancing_rhs
    }

    /// True when balancing is on and there is at least one unlabeled point.
    pub fn balancing_enabled(&self) -> bool {
        self.balancing_enabled && self.n > self.l
    }

    pub fn penalties(&self) -> (f64, f64) {
        self.penalties
    }

    pub fn is_labeled(&self, i: usize) -> bool {
        i < self.l
    }

    pub fn with_balancing(mut self, on: bool) -> Self {
        self.balancing_enabled = on;
        self
    }
}

/// Builds `D`, `K = gram + D` and `C = ½K⁻¹`.
pub fn assemble_problem(
    gram: &Mat<f64>,
    labels: &[f64],
    c_l: f64,
    c_u: f64,
    balancing: bool,
) -> Result<ProblemData> {
    let n = gram.nrows();
    if gram.ncols() != n {
        return Err(S3vmError::Dimension {
            expected: n,
            got: gram.ncols(),
        });
    }
    let l = labels.len();
    if l == 0 || l > n {
        return Err(S3vmError::InvalidInput(format!(
            "need 1 <= l <= n, got l={l}, n={n}"
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(S3vmError::InvalidLabel(bad));
    }
    if !(c_l > 0.0 && c_u > 0.0 && c_l.is_finite() && c_u.is_finite()) {
        return Err(S3vmError::InvalidInput(format!(
            "penalties must be positive, got C_l={c_l}, C_u={c_u}"
        )));
    }
    let kernel = Mat::from_fn(n, n, |i, j| {
        let g = 0.5 * (gram[(i, j)] + gram[(j, i)]);
        if i == j {
            g + 1.0 / (2.0 * if i < l { c_l } else { c_u })
        } else {
            g
        }
    });
    if (0..n).any(|j| kernel.col_as_slice(j).iter().any(|v| !v.is_finite())) {
        return Err(S3vmError::InvalidInput("non-finite gram entry".into()));
    }
    let cost = half_inverse(&kernel)?;
    let balancing_rhs = labels.iter().sum::<f64>() / l as f64;
    Ok(ProblemData {
        n,
        l,
        cost,
        kernel,
        labels: labels.to_vec(),
        balancing_rhs,
        balancing_enabled: balancing,
        penalties: (c_l, c_u),
    })
}

fn half_inverse(k: &Mat<f64>) -> Result<Mat<f64>> {
    let n = k.nrows();
    let half = Mat::from_fn(n, n, |i, j| if i == j { 0.5 } else { 0.0 });
    let factor = match k.llt(Side::Lower) {
        Ok(f) => f,
        Err(_) => {
            let trace: f64 = (0..n).map(|i| k[(i, i)]).sum();
            let jitter = 1e-10 * trace / n as f64;
            let kj = Mat::from_fn(n, n, |i, j| k[(i, j)] + if i == j { jitter } else { 0.0 });
            kj.llt(Side::Lower).map_err(|e| {
                S3vmError::Factorization(format!(
                    "K = gram + D is not positive definite even after jitter {jitter:.3e} ({e:?})"
                ))
            })?
        }
    };
    let mut c = factor.solve(&half);
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}

pub(crate) fn quad_form(m: &Mat<f64>, x: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for j in 0..n {
        let col = m.col_as_slice(j);
        let mut t = 0.0;
        for i in 0..n {
            t += col[i] * x[i];
        }
        s += t * x[j];
    }
    s
}

/// `xᵀCx`.
pub fn objective(p: &ProblemData, x: &[f64]) -> Result<f64> {
    if x.len() != p.n {
        return Err(S3vmError::Dimension {
            expected: p.n,
            got: x.len(),
        });
    }
    Ok(quad_form(&p.cost, x))
}

pub fn check_feasible(p: &ProblemData, x: &[f64], tol: f64) -> bool {
    if x.len() != p.n || x.iter().any(|v| !v.is_finite()) {
        return false;
    }
    for i in 0..p.l {
        if p.labels[i] * x[i] < 1.0 - tol {
            return false;
        }
    }
    for &v in &x[p.l..] {
        if v * v < 1.0 - tol {
            return false;
        }
    }
    if p.balancing_enabled() {
        let mean = x[p.l..].iter().sum::<f64>() / (p.n - p.l) as f64;
        if (mean - p.balancing_rhs).abs() > tol {
            return false;
        }
    }
    true
}

/// `((UB - LB) / UB) * 100`, clamped below at zero.
pub fn percentage_gap(ub: f64, lb: f64) -> Result<f64> {
    if !(ub > 0.0) {
        return Err(S3vmError::NonPositiveUpperBound(ub));
    }
    Ok(((ub - lb) / ub * 100.0).max(0.0))
}

/// Per-variable bounds; infinite entries mean "unbounded".
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxBounds {
    pub fn unbounded(n: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    /// Root boxes: labeled points fixed to their sign, the rest free.
    pub fn from_labels(p: &ProblemData) -> Self {
        let mut b = Self::unbounded(p.n);
        for (i, &y) in p.labels.iter().enumerate() {
            if y > 0.0 {
                b.lower[i] = 1.0;
            } else {
                b.upper[i] = -1.0;
            }
        }
        b
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty_box(&self) -> bool {
        self.lower.iter().zip(&self.upper).any(|(l, u)| l > u)
    }

    pub fn is_sign_fixed(&self, i: usize) -> bool {
        self.lower[i] >= 1.0 || self.upper[i] <= -1.0
    }

    /// Sign implied by the box, if any.
    pub fn fixed_sign(&self, i: usize) -> Option<f64> {
        if self.lower[i] >= 1.0 {
            Some(1.0)
        } else if self.upper[i] <= -1.0 {
            Some(-1.0)
        } else {
            None
        }
    }

    pub fn intersect(&mut self, other: &BoxBounds) {
        for i in 0..self.len() {
            self.lower[i] = self.lower[i].max(other.lower[i]);
            self.upper[i] = self.upper[i].min(other.upper[i]);
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &v)| v >= self.lower[i] - tol && v <= self.upper[i] + tol)
    }

    /// True when every entry is at least as tight as in `wider`.
    pub fn within(&self, wider: &BoxBounds) -> bool {
        (0..self.len()).all(|i| self.lower[i] >= wider.lower[i] && self.upper[i] <= wider.upper[i])
    }

    /// Any lower bound above -1 forces `x_i >= 1` (and symmetrically), since
    /// every variable satisfies `x_i² >= 1` at feasible points.
    pub fn project_signs(&mut self) -> Vec<usize> {
        let mut fixed = Vec::new();
        for i in 0..self.len() {
            let before = self.is_sign_fixed(i);
            if self.lower[i] > -1.0 {
                self.lower[i] = self.lower[i].max(1.0);
            }
            if self.upper[i] < 1.0 {
                self.upper[i] = self.upper[i].min(-1.0);
            }
            if !before && self.is_sign_fixed(i) {
                fixed.push(i);
            }
        }
        fixed
    }
}

/// Best known feasible point.
#[derive(Debug, Clone)]
pub struct Incumbent {
    pub point: Vec<f64>,
    pub labeling: Labeling,
    pub objective: f64,
}

impl Incumbent {
    pub fn from_point(p: &ProblemData, point: Vec<f64>) -> Result<Self> {
        let objective = objective(p, &point)?;
        let mut values: Vec<f64> = point
            .iter()
            .map(|&v| if v >= 0.0 { 1.0 } else { -1.0 })
            .collect();
        values[..p.l].copy_from_slice(&p.labels);
        Ok(Self {
            point,
            labeling: Labeling::new(values, p.l)?,
            objective,
        })
    }
}
