//! Bound tightening: optimality-based (min/max of each variable under the
//! objective cutoff) and marginals-based (from SDP multipliers).

use std::collections::BTreeSet;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use s3vm_conic::{solve_qp, LinearRow, QpModel, QpSettings, QuadCutoff, Sense, Status};

use crate::problem::{BoxBounds, ProblemData};
use crate::relaxations::{qp_bound, RelaxedSolution, RowTag};
use crate::Result;

/// Relative inflation of the cutoff so the level set keeps an interior.
const CUTOFF_SLACK: f64 = 1e-6;
const ACTIVE_TOL: f64 = 1e-6;
const DUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TightenReport {
    pub updated_indices: BTreeSet<usize>,
    pub boxes: BoxBounds,
    pub newly_sign_fixed: BTreeSet<usize>,
}

impl TightenReport {
    fn diff(before: &BoxBounds, after: BoxBounds) -> Self {
        let mut updated_indices = BTreeSet::new();
        let mut newly_sign_fixed = BTreeSet::new();
        for i in 0..before.len() {
            if after.lower[i] > before.lower[i] || after.upper[i] < before.upper[i] {
                updated_indices.insert(i);
            }
            if !before.is_sign_fixed(i) && after.is_sign_fixed(i) {
                newly_sign_fixed.insert(i);
            }
        }
        Self {
            updated_indices,
            boxes: after,
            newly_sign_fixed,
        }
    }

    pub fn is_empty_box(&self) -> bool {
        self.boxes.is_empty_box()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObbtOutcome {
    Tightened(TightenReport),
    /// No point inside the boxes reaches the cutoff.
    Empty,
}

/// Min and max of each `x_i` over the boxes, the balancing row and
/// `xᵀCx <= UB`, followed by sign projection. Bounds already fixing the sign
/// skip the corresponding subproblem.
pub fn obbt(p: &ProblemData, boxes: &BoxBounds, ub: f64) -> Result<ObbtOutcome> {
    let n = p.n();
    if boxes.is_empty_box() {
        return Ok(ObbtOutcome::Empty);
    }
    let cutoff = ub * (1.0 + CUTOFF_SLACK) + 1e-12;
    if qp_bound(p, boxes)? > cutoff {
        return Ok(ObbtOutcome::Empty);
    }
    let mut out = boxes.clone();
    // The ellipsoid xᵀCx <= UB alone gives |x_i| <= sqrt(UB (C⁻¹)_ii) = sqrt(2 UB K_ii).
    for i in 0..n {
        let r = (2.0 * cutoff * p.kernel()[(i, i)]).sqrt();
        out.lower[i] = out.lower[i].max(-r);
        out.upper[i] = out.upper[i].min(r);
    }
    out.project_signs();
    if out.is_empty_box() {
        return Ok(ObbtOutcome::Empty);
    }
    let mut model = QpModel::new(Mat::zeros(n, n), vec![0.0; n]);
    model.cutoff = Some(QuadCutoff {
        matrix: p.cost().clone(),
        rhs: cutoff,
    });
    if p.balancing_enabled() {
        let w = 1.0 / p.unlabeled_count() as f64;
        model.rows.push(LinearRow {
            coefs: (p.l()..n).map(|i| (i, w)).collect(),
            sense: Sense::Eq,
            rhs: p.balancing_rhs(),
        });
    }
    let projector = Projector::new(p, boxes);
    for i in 0..n {
        let mut reduced = projector.as_ref().and_then(|pr| pr.model(p, boxes, i, cutoff));
        for dir in [1.0, -1.0] {
            if (dir > 0.0 && out.lower[i] >= 1.0) || (dir < 0.0 && out.upper[i] <= -1.0) {
                continue;
            }
            let (m, pos) = match &mut reduced {
                Some((m, pos)) => (m, *pos),
                None => {
                    model.lower = out.lower.clone();
                    model.upper = out.upper.clone();
                    (&mut model, i)
                }
            };
            m.linear.iter_mut().for_each(|v| *v = 0.0);
            m.linear[pos] = dir;
            let sol = solve_qp(m, &QpSettings::default())?;
            match sol.status {
                Status::Infeasible => return Ok(ObbtOutcome::Empty),
                Status::NumericalFailure => continue,
                Status::Optimal => {}
            }
            let v = sol.x[pos];
            let margin = 1e-6 * (1.0 + v.abs());
            if dir > 0.0 {
                out.lower[i] = out.lower[i].max(v - margin);
            } else {
                out.upper[i] = out.upper[i].min(v + margin);
            }
            out.project_signs();
            if out.is_empty_box() {
                return Ok(ObbtOutcome::Empty);
            }
        }
    }
    Ok(ObbtOutcome::Tightened(TightenReport::diff(boxes, out)))
}

/// Exact projection of the OBBT feasible set onto the variables that carry a
/// finite bound, the target variable and the balancing mean `aᵀx`. Since
/// `C⁻¹ = 2K`, the image of `xᵀCx <= c` under `z = Mx` is
/// `zᵀ(2MKMᵀ)⁻¹z <= c`, so every subproblem shrinks to a handful of variables
/// when few bounds are finite.
struct Projector {
    bounded: Vec<usize>,
    /// `K a` with `a` the balancing row, and `aᵀKa`.
    ka: Option<(Vec<f64>, f64)>,
}

impl Projector {
    fn new(p: &ProblemData, boxes: &BoxBounds) -> Option<Self> {
        let n = p.n();
        let bounded: Vec<usize> = (0..n)
            .filter(|&i| boxes.lower[i].is_finite() || boxes.upper[i].is_finite())
            .collect();
        if 2 * (bounded.len() + 2) > n {
            return None;
        }
        let ka = p.balancing_enabled().then(|| {
            let w = 1.0 / p.unlabeled_count() as f64;
            let k = p.kernel();
            let ka: Vec<f64> = (0..n).map(|j| w * (p.l()..n).map(|m| k[(j, m)]).sum::<f64>()).collect();
            let aka = w * ka[p.l()..].iter().sum::<f64>();
            (ka, aka)
        });
        Some(Self { bounded, ka })
    }

    /// Reduced model for variable `i` and the position of `x_i` in it.
    fn model(&self, p: &ProblemData, boxes: &BoxBounds, i: usize, cutoff: f64) -> Option<(QpModel, usize)> {
        let mut idx = self.bounded.clone();
        let pos = match idx.binary_search(&i) {
            Ok(k) => k,
            Err(k) => {
                idx.insert(k, i);
                k
            }
        };
        let t = idx.len();
        let m = t + usize::from(self.ka.is_some());
        let k = p.kernel();
        let g = Mat::from_fn(m, m, |a, b| {
            2.0 * match (a < t, b < t, &self.ka) {
                (true, true, _) => k[(idx[a], idx[b])],
                (true, false, Some((ka, _))) => ka[idx[a]],
                (false, true, Some((ka, _))) => ka[idx[b]],
                (false, false, Some((_, aka))) => *aka,
                _ => unreachable!("balancing coordinate exists only with balancing"),
            }
        });
        let eye = Mat::<f64>::identity(m, m);
        let mut inv = g.llt(Side::Lower).ok()?.solve(&eye);
        for b in 0..m {
            for a in 0..b {
                let v = 0.5 * (inv[(a, b)] + inv[(b, a)]);
                inv[(a, b)] = v;
                inv[(b, a)] = v;
            }
        }
        let mut model = QpModel::new(Mat::zeros(m, m), vec![0.0; m]);
        for (a, &j) in idx.iter().enumerate() {
            model.lower[a] = boxes.lower[j];
            model.upper[a] = boxes.upper[j];
        }
        if self.ka.is_some() {
            model.rows.push(LinearRow {
                coefs: vec![(t, 1.0)],
                sense: Sense::Eq,
                rhs: p.balancing_rhs(),
            });
        }
        model.cutoff = Some(QuadCutoff { matrix: inv, rhs: cutoff });
        Some((model, pos))
    }
}

/// Reduces boxes using multipliers of active box and diagonal rows: an active
/// row `g(x) <= 0` with multiplier `λ` implies `g(x) >= -(UB - LB)/λ` for
/// every point at least as good as the incumbent.
pub fn marginal_box_update(boxes: &BoxBounds, sol: &RelaxedSolution, ub: f64, lb: f64) -> TightenReport {
    let mut out = boxes.clone();
    let budget = (ub - lb).max(0.0) + 1e-6 * ub.abs().max(1.0);
    for row in &sol.rows {
        if row.dual <= DUAL_TOL || row.slack > ACTIVE_TOL * row.rhs.abs().max(1.0) {
            continue;
        }
        let t = budget / row.dual;
        match row.tag {
            RowTag::BoxLower(i) => out.upper[i] = out.upper[i].min(row.rhs + t),
            RowTag::BoxUpper(i) => out.lower[i] = out.lower[i].max(row.rhs - t),
            RowTag::DiagLower(i) => {
                let r = (1.0 + t).sqrt();
                out.lower[i] = out.lower[i].max(-r);
                out.upper[i] = out.upper[i].min(r);
            }
            RowTag::DiagUpper(i) => {
                let q = row.rhs - t;
                if q >= 1.0 {
                    let r = q.sqrt();
                    if out.lower[i] > -r {
                        out.lower[i] = out.lower[i].max(r);
                    }
                    if out.upper[i] < r {
                        out.upper[i] = out.upper[i].min(-r);
                    }
                }
            }
            _ => {}
        }
    }
    out.project_signs();
    TightenReport::diff(boxes, out)
}
