//! Upper bounds: rounding the relaxation, the convex QP over a fixed
//! labeling, and an exact two-variable local search.

use faer::Mat;
use s3vm_conic::{solve_qp, LinearRow, QpModel, QpSettings, Sense, Status};

use crate::problem::{check_feasible, objective, Incumbent, Labeling, ProblemData, FEAS_TOL};
use crate::svm::{sign, supervised_labeling};
use crate::{Result, S3vmError};

/// Labeled entries keep their labels, the rest take `sign(x̄_i)` with
/// `sign(0) = +1`.
pub fn round_sdp(x_bar: &[f64], labels: &[f64]) -> Labeling {
    let mut values: Vec<f64> = x_bar.iter().map(|&v| sign(v)).collect();
    values[..labels.len()].copy_from_slice(labels);
    Labeling::new(values, labels.len()).expect("rounded values are ±1")
}

/// True when some point with the given labeling satisfies the balancing row.
pub fn labeling_balance_feasible(p: &ProblemData, lab: &Labeling) -> bool {
    if !p.balancing_enabled() {
        return true;
    }
    let u = lab.unlabeled();
    let r = p.balancing_rhs();
    if u.iter().all(|&v| v > 0.0) {
        r >= 1.0
    } else if u.iter().all(|&v| v < 0.0) {
        r <= -1.0
    } else {
        true
    }
}

#[derive(Debug, Clone)]
pub struct LabelQpSolution {
    pub incumbent: Incumbent,
    /// Multiplier of `ȳ_i x_i >= 1` for each point.
    pub duals: Vec<f64>,
}

/// `min xᵀCx` s.t. `ȳ_i x_i >= 1` for all `i` and the balancing row.
pub fn label_qp_detailed(p: &ProblemData, lab: &Labeling) -> Result<LabelQpSolution> {
    let n = p.n();
    if lab.len() != n {
        return Err(S3vmError::Dimension {
            expected: n,
            got: lab.len(),
        });
    }
    if !labeling_balance_feasible(p, lab) {
        return Err(S3vmError::LabelingInfeasible);
    }
    let mut model = QpModel::new(p.cost().clone(), vec![0.0; n]);
    for (i, &y) in lab.values().iter().enumerate() {
        if y > 0.0 {
            model.lower[i] = 1.0;
        } else {
            model.upper[i] = -1.0;
        }
    }
    if p.balancing_enabled() {
        let w = 1.0 / p.unlabeled_count() as f64;
        model.rows.push(LinearRow {
            coefs: (p.l()..n).map(|i| (i, w)).collect(),
            sense: Sense::Eq,
            rhs: p.balancing_rhs(),
        });
    }
    let sol = solve_qp(&model, &QpSettings::default())?;
    match sol.status {
        Status::Infeasible => return Err(S3vmError::LabelingInfeasible),
        Status::NumericalFailure if !check_feasible(p, &sol.x, FEAS_TOL) => {
            return Err(S3vmError::Solver("labeling qp did not converge".into()))
        }
        _ => {}
    }
    let duals = (0..n)
        .map(|i| sol.lower_duals[i].max(sol.upper_duals[i]))
        .collect();
    let objective = objective(p, &sol.x)?;
    Ok(LabelQpSolution {
        incumbent: Incumbent {
            point: sol.x,
            labeling: lab.clone(),
            objective,
        },
        duals,
    })
}

pub fn label_qp(p: &ProblemData, lab: &Labeling) -> Result<Incumbent> {
    label_qp_detailed(p, lab).map(|s| s.incumbent)
}

/// While every unlabeled entry has the same sign `s` with `s·r < 1`, flips
/// the one with the smallest `|x̄_i|`.
pub fn repair_labeling(lab: &Labeling, x_bar: &[f64], r: f64) -> Labeling {
    let mut out = lab.clone();
    let l = lab.labeled_count();
    let n = lab.len();
    if n - l == 1 {
        if r.abs() >= 1.0 {
            out.values_mut_unlabeled(|v| *v = sign(r));
        }
        return out;
    }
    for _ in l..n {
        let u = out.unlabeled();
        let s = u[0];
        if u.iter().any(|&v| v != s) || s * r >= 1.0 {
            break;
        }
        let i = (l..n)
            .min_by(|&a, &b| x_bar[a].abs().total_cmp(&x_bar[b].abs()).then(a.cmp(&b)))
            .expect("at least one unlabeled point");
        out.flip(i);
    }
    out
}

impl Labeling {
    fn values_mut_unlabeled(&mut self, f: impl Fn(&mut f64)) {
        let l = self.labeled_count();
        let mut v = self.values().to_vec();
        v[l..].iter_mut().for_each(f);
        *self = Labeling::new(v, l).expect("±1 preserved");
    }
}

/// Reduced objective `a t² + b t + c` in `t = x_j` with `x_i = k - t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoOptSubproblem {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub k: f64,
}

impl TwoOptSubproblem {
    /// `eta_i = Σ_{m≠i,j} C_mi x_m`, likewise `eta_j`.
    pub fn new(c_ii: f64, c_ij: f64, c_jj: f64, eta_i: f64, eta_j: f64, k: f64) -> Self {
        Self {
            a: c_ii + c_jj - 2.0 * c_ij,
            b: 2.0 * k * (c_ij - c_ii) - 2.0 * eta_i + 2.0 * eta_j,
            c: c_ii * k * k + 2.0 * eta_i * k,
            k,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.a * t + self.b) * t + self.c
    }

    /// Allows rounding error so that the boundary points `k ± 1` qualify.
    pub fn feasible(&self, t: f64) -> bool {
        let eps = 1e-12 * (1.0 + self.k.abs());
        t.abs() >= 1.0 - eps && (self.k - t).abs() >= 1.0 - eps
    }

    /// Global minimizer over `|t| >= 1, |k - t| >= 1`. `current` is kept
    /// unless another candidate is strictly better.
    pub fn solve(&self, current: f64) -> f64 {
        let k = self.k;
        let mut best = current;
        let mut best_v = self.value(current);
        let candidates = [-self.b / (2.0 * self.a), 1.0, -1.0, k - 1.0, k + 1.0];
        for t in candidates {
            if !t.is_finite() || !self.feasible(t) {
                continue;
            }
            let v = self.value(t);
            if v < best_v - 1e-12 * (1.0 + best_v.abs()) {
                best = t;
                best_v = v;
            }
        }
        best
    }
}

/// Exact re-optimization of `(x_i, x_j)` with `x_i + x_j` fixed.
pub fn two_opt_step(cost: &Mat<f64>, x: &[f64], i: usize, j: usize) -> (f64, f64) {
    let eta = |a: usize| -> f64 {
        (0..x.len())
            .filter(|&m| m != i && m != j)
            .map(|m| cost[(m, a)] * x[m])
            .sum()
    };
    let sub = TwoOptSubproblem::new(cost[(i, i)], cost[(i, j)], cost[(j, j)], eta(i), eta(j), x[i] + x[j]);
    let t = sub.solve(x[j]);
    (sub.k - t, t)
}

/// Statistics of a two-opt run.
#[derive(Debug, Clone, Default)]
pub struct TwoOptTrace {
    /// Objective after every accepted move and every QP re-solve.
    pub objectives: Vec<f64>,
}

/// Lexicographic pair sweeps with immediate acceptance; after a sweep with
/// moves, re-solves the labeling QP at the rounded point.
pub fn two_opt_search(p: &ProblemData, start: &Incumbent) -> Result<Incumbent> {
    two_opt_search_traced(p, start).map(|(inc, _)| inc)
}

pub fn two_opt_search_traced(p: &ProblemData, start: &Incumbent) -> Result<(Incumbent, TwoOptTrace)> {
    let (n, l) = (p.n(), p.l());
    let c = p.cost();
    let mut x = start.point.clone();
    let mut g = mat_vec(c, &x);
    let mut obj = objective(p, &x)?;
    let mut trace = TwoOptTrace {
        objectives: vec![obj],
    };
    for _round in 0..200 {
        let mut moved = false;
        for i in l..n {
            for j in i + 1..n {
                let (xi, xj) = (x[i], x[j]);
                let eta_i = g[i] - c[(i, i)] * xi - c[(i, j)] * xj;
                let eta_j = g[j] - c[(j, j)] * xj - c[(i, j)] * xi;
                let sub = TwoOptSubproblem::new(c[(i, i)], c[(i, j)], c[(j, j)], eta_i, eta_j, xi + xj);
                let t = sub.solve(xj);
                if t == xj {
                    continue;
                }
                let gain = sub.value(xj) - sub.value(t);
                if gain <= 1e-10 * (1.0 + obj.abs()) {
                    continue;
                }
                let (di, dj) = (sub.k - t - xi, t - xj);
                x[i] = sub.k - t;
                x[j] = t;
                let (ci, cj) = (c.col_as_slice(i), c.col_as_slice(j));
                for m in 0..n {
                    g[m] += ci[m] * di + cj[m] * dj;
                }
                obj -= gain;
                trace.objectives.push(obj);
                moved = true;
            }
        }
        if !moved {
            break;
        }
        obj = objective(p, &x)?;
        let lab = round_point(p, &x);
        if let Ok(inc) = label_qp(p, &lab) {
            if inc.objective <= obj && check_feasible(p, &inc.point, FEAS_TOL) {
                x = inc.point;
                obj = inc.objective;
                g = mat_vec(c, &x);
                trace.objectives.push(obj);
            }
        }
    }
    Ok((Incumbent::from_point(p, x)?, trace))
}

fn round_point(p: &ProblemData, x: &[f64]) -> Labeling {
    round_sdp(x, p.labels())
}

fn mat_vec(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    for (j, &xj) in x.iter().enumerate() {
        let col = m.col_as_slice(j);
        for i in 0..n {
            out[i] += col[i] * xj;
        }
    }
    out
}

/// Labeling QP with the repair rule applied when balancing makes it infeasible.
pub fn label_qp_repaired(p: &ProblemData, lab: &Labeling, x_bar: &[f64]) -> Result<Incumbent> {
    match label_qp(p, lab) {
        Err(S3vmError::LabelingInfeasible) => {
            let fixed = repair_labeling(lab, x_bar, p.balancing_rhs());
            label_qp(p, &fixed)
        }
        other => other,
    }
}

/// Rounding, labeling QP and two-opt from a relaxation point.
pub fn improve_from_point(p: &ProblemData, x_bar: &[f64]) -> Result<Incumbent> {
    let lab = round_sdp(x_bar, p.labels());
    let start = label_qp_repaired(p, &lab, x_bar)?;
    two_opt_search(p, &start)
}

/// Starting incumbent from the supervised SVM labeling.
pub fn initial_incumbent(p: &ProblemData) -> Result<Incumbent> {
    let lab = supervised_labeling(p)?;
    let x_bar = lab.values().to_vec();
    let start = label_qp_repaired(p, &lab, &x_bar)?;
    two_opt_search(p, &start)
}
