//! Primal-dual interior-point method for convex problems of the form
//!
//! ```text
//! min  xᵀQx + cᵀx + c0
//! s.t. lower <= x <= upper,  linear rows,  optional xᵀPx <= rho
//! ```
//!
//! Inequalities carry slacks, equalities are enforced through the Newton
//! system. If the main solve stalls, a phase-I problem decides between
//! infeasibility and numerical failure.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::{ModelError, Sense, Status};

#[derive(Debug, Clone)]
pub struct LinearRow {
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Convex cutoff `xᵀ P x <= rhs` with `P` PSD.
#[derive(Debug, Clone)]
pub struct QuadCutoff {
    pub matrix: Mat<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct QpModel {
    /// Objective matrix `Q` of `xᵀQx` (no ½ factor).
    pub quad: Mat<f64>,
    pub linear: Vec<f64>,
    pub constant: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LinearRow>,
    pub cutoff: Option<QuadCutoff>,
}

impl QpModel {
    pub fn new(quad: Mat<f64>, linear: Vec<f64>) -> Self {
        let n = linear.len();
        Self {
            quad,
            linear,
            constant: 0.0,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            rows: Vec::new(),
            cutoff: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        quad_form(&self.quad, x) + dot(&self.linear, x) + self.constant
    }

    fn validate(&self) -> Result<(), ModelError> {
        let n = self.dim();
        if self.quad.nrows() != n || self.quad.ncols() != n {
            return Err(ModelError::Dimension("objective matrix".into()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(ModelError::Dimension("bounds".into()));
        }
        if self.linear.iter().any(|v| !v.is_finite()) || !self.constant.is_finite() {
            return Err(ModelError::NonFinite("objective"));
        }
        if self.lower.iter().chain(&self.upper).any(|v| v.is_nan()) {
            return Err(ModelError::NonFinite("bounds"));
        }
        for row in &self.rows {
            if !row.rhs.is_finite() || row.coefs.iter().any(|c| !c.1.is_finite()) {
                return Err(ModelError::NonFinite("linear row"));
            }
            if row.coefs.iter().any(|c| c.0 >= n) {
                return Err(ModelError::Dimension("linear row index".into()));
            }
        }
        if let Some(cut) = &self.cutoff {
            if cut.matrix.nrows() != n || cut.matrix.ncols() != n {
                return Err(ModelError::Dimension("cutoff matrix".into()));
            }
            if !cut.rhs.is_finite() {
                return Err(ModelError::NonFinite("cutoff rhs"));
            }
        }
        Ok(())
    }
}

/// Residual multiple of `tol` at which a stalled run still counts as optimal.
const NEAR_OPTIMAL_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, Copy)]
pub struct QpSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub status: Status,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Multipliers of `rows`; nonnegative for inequality rows.
    pub row_duals: Vec<f64>,
    pub lower_duals: Vec<f64>,
    pub upper_duals: Vec<f64>,
    pub cutoff_dual: f64,
    pub iterations: usize,
    /// Largest scaled KKT residual at the returned point.
    pub kkt_residual: f64,
}

#[derive(Debug, Clone, Copy)]
enum Origin {
    Lower(usize),
    Upper(usize),
    Row(usize),
    Extra,
}

/// Affine inequality `coefsᵀx + cst <= 0`, scaled to unit coefficient norm.
#[derive(Debug, Clone)]
struct Ineq {
    coefs: Vec<(usize, f64)>,
    cst: f64,
    back: f64,
    origin: Origin,
}

#[derive(Debug, Clone)]
struct Eqn {
    coefs: Vec<(usize, f64)>,
    rhs: f64,
    back: f64,
    row: Option<usize>,
}

#[derive(Debug, Clone)]
struct Inner {
    n: usize,
    quad: Mat<f64>,
    linear: Vec<f64>,
    ineqs: Vec<Ineq>,
    eqs: Vec<Eqn>,
    /// `xᵀPx - rho <= 0`, already scaled.
    cutoff: Option<(Mat<f64>, f64, f64)>,
    start: Vec<f64>,
}

struct Outcome {
    converged: bool,
    unbounded: bool,
    x: Vec<f64>,
    lam: Vec<f64>,
    nu: Vec<f64>,
    lam_q: f64,
    iterations: usize,
    kkt: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sparse_dot(c: &[(usize, f64)], x: &[f64]) -> f64 {
    c.iter().map(|&(i, v)| v * x[i]).sum()
}

fn mat_vec(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let col = m.col_as_slice(j);
        for i in 0..n {
            out[i] += col[i] * xj;
        }
    }
    out
}

fn quad_form(m: &Mat<f64>, x: &[f64]) -> f64 {
    dot(&mat_vec(m, x), x)
}

fn max_abs(m: &Mat<f64>) -> f64 {
    let mut v = 0.0f64;
    for j in 0..m.ncols() {
        for &x in m.col_as_slice(j) {
            v = v.max(x.abs());
        }
    }
    v
}

fn scaled(coefs: Vec<(usize, f64)>) -> (Vec<(usize, f64)>, f64) {
    let norm = coefs.iter().map(|c| c.1 * c.1).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (coefs, 1.0);
    }
    (coefs.into_iter().map(|(i, v)| (i, v / norm)).collect(), norm)
}

impl Inner {
    fn from_model(model: &QpModel) -> (Self, f64) {
        let n = model.dim();
        let os = max_abs(&model.quad)
            .max(model.linear.iter().fold(0.0f64, |a, v| a.max(v.abs())))
            .max(1.0);
        let quad = Mat::from_fn(n, n, |i, j| 0.5 * (model.quad[(i, j)] + model.quad[(j, i)]) / os);
        let linear = model.linear.iter().map(|v| v / os).collect();
        let mut ineqs = Vec::new();
        for i in 0..n {
            if model.lower[i].is_finite() {
                ineqs.push(Ineq {
                    coefs: vec![(i, -1.0)],
                    cst: model.lower[i],
                    back: os,
                    origin: Origin::Lower(i),
                });
            }
            if model.upper[i].is_finite() {
                ineqs.push(Ineq {
                    coefs: vec![(i, 1.0)],
                    cst: -model.upper[i],
                    back: os,
                    origin: Origin::Upper(i),
                });
            }
        }
        let mut eqs = Vec::new();
        for (k, row) in model.rows.iter().enumerate() {
            let (coefs, norm) = scaled(row.coefs.clone());
            match row.sense {
                Sense::Le => ineqs.push(Ineq {
                    coefs,
                    cst: -row.rhs / norm,
                    back: os / norm,
                    origin: Origin::Row(k),
                }),
                Sense::Ge => ineqs.push(Ineq {
                    coefs: coefs.into_iter().map(|(i, v)| (i, -v)).collect(),
                    cst: row.rhs / norm,
                    back: os / norm,
                    origin: Origin::Row(k),
                }),
                Sense::Eq => eqs.push(Eqn {
                    coefs,
                    rhs: row.rhs / norm,
                    back: os / norm,
                    row: Some(k),
                }),
            }
        }
        let cutoff = model.cutoff.as_ref().map(|c| {
            let cs = c.rhs.abs().max(max_abs(&c.matrix)).max(1.0);
            let p = Mat::from_fn(n, n, |i, j| 0.5 * (c.matrix[(i, j)] + c.matrix[(j, i)]) / cs);
            (p, c.rhs / cs, os / cs)
        });
        let start = (0..n)
            .map(|i| {
                let (l, u) = (model.lower[i], model.upper[i]);
                match (l.is_finite(), u.is_finite()) {
                    (true, true) => 0.5 * (l + u),
                    (true, false) => l.max(0.0) + 1.0,
                    (false, true) => u.min(0.0) - 1.0,
                    (false, false) => 0.0,
                }
            })
            .collect();
        (
            Self {
                n,
                quad,
                linear,
                ineqs,
                eqs,
                cutoff,
                start,
            },
            os,
        )
    }

    /// Minimizes the largest constraint violation `t` over `t >= -1`.
    fn phase_one(&self) -> Self {
        let n = self.n + 1;
        let mut ineqs: Vec<Ineq> = self
            .ineqs
            .iter()
            .map(|g| {
                let mut coefs = g.coefs.clone();
                coefs.push((self.n, -1.0));
                Ineq {
                    coefs,
                    cst: g.cst,
                    back: 1.0,
                    origin: g.origin,
                }
            })
            .collect();
        ineqs.push(Ineq {
            coefs: vec![(self.n, -1.0)],
            cst: -1.0,
            back: 1.0,
            origin: Origin::Extra,
        });
        let mut linear = vec![0.0; n];
        linear[self.n] = 1.0;
        let cutoff = self.cutoff.as_ref().map(|(p, rho, _)| {
            let q = Mat::from_fn(n, n, |i, j| if i < self.n && j < self.n { p[(i, j)] } else { 0.0 });
            (q, *rho, 1.0)
        });
        let mut start = self.start.clone();
        let mut viol = 0.0f64;
        for g in &self.ineqs {
            viol = viol.max(sparse_dot(&g.coefs, &start) + g.cst);
        }
        start.push(viol.max(0.0) + 1.0);
        let mut quad = Mat::zeros(n, n);
        // A tiny proximal term keeps the Newton matrix definite along free directions.
        for i in 0..self.n {
            quad[(i, i)] = 1e-10;
        }
        Self {
            n,
            quad,
            linear,
            ineqs,
            eqs: self.eqs.clone(),
            cutoff,
            start,
        }
    }

    fn cutoff_with_slack(&self) -> Option<(&Mat<f64>, f64)> {
        self.cutoff.as_ref().map(|(p, rho, _)| (p, *rho))
    }

    fn run(&self, settings: &QpSettings, extra_var_cutoff: bool) -> Outcome {
        let n = self.n;
        let mi = self.ineqs.len();
        let me = self.eqs.len();
        let mut x = self.start.clone();
        let g_of = |x: &[f64]| -> Vec<f64> {
            self.ineqs
                .iter()
                .map(|g| sparse_dot(&g.coefs, x) + g.cst)
                .collect()
        };
        // Phase-I shifts the cutoff by the violation variable t.
        let gq_of = |x: &[f64]| -> Option<(f64, Vec<f64>)> {
            self.cutoff_with_slack().map(|(p, rho)| {
                let px = mat_vec(p, x);
                let mut val = dot(&px, x) - rho;
                let mut grad: Vec<f64> = px.iter().map(|v| 2.0 * v).collect();
                if extra_var_cutoff {
                    val -= x[n - 1];
                    grad[n - 1] = -1.0;
                }
                (val, grad)
            })
        };
        let g0 = g_of(&x);
        let mut w: Vec<f64> = g0.iter().map(|&g| (-g).max(1.0)).collect();
        let mut lam = vec![1.0; mi];
        let mut nu = vec![0.0; me];
        let has_q = self.cutoff.is_some();
        let (mut wq, mut lq) = match gq_of(&x) {
            Some((v, _)) => ((-v).max(1.0), 1.0),
            None => (0.0, 0.0),
        };
        let lin_norm = self.linear.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let ncomp = mi as f64 + if has_q { 1.0 } else { 0.0 };

        let mut out = Outcome {
            converged: false,
            unbounded: false,
            x: x.clone(),
            lam: lam.clone(),
            nu: nu.clone(),
            lam_q: lq,
            iterations: 0,
            kkt: f64::INFINITY,
        };
        let mut small_steps = 0;
        let (mut best_kkt, mut last_gain) = (f64::INFINITY, 0);
        // Best iterate so far; late iterations can lose accuracy.
        let mut best = (x.clone(), lam.clone(), nu.clone(), lq, f64::INFINITY);
        // Floor of the centering target, keeping `λ/w` bounded near the end.
        let mu_floor = 1e-2 * settings.tol;
        for iter in 0..settings.max_iter {
            out.iterations = iter;
            let g = g_of(&x);
            let q = gq_of(&x);
            let qx = mat_vec(&self.quad, &x);
            let mut grad: Vec<f64> = (0..n).map(|i| 2.0 * qx[i] + self.linear[i]).collect();
            for (k, gk) in self.ineqs.iter().enumerate() {
                for &(i, v) in &gk.coefs {
                    grad[i] += lam[k] * v;
                }
            }
            if let Some((_, gg)) = &q {
                for i in 0..n {
                    grad[i] += lq * gg[i];
                }
            }
            for (k, e) in self.eqs.iter().enumerate() {
                for &(i, v) in &e.coefs {
                    grad[i] += nu[k] * v;
                }
            }
            let r: Vec<f64> = (0..mi).map(|k| g[k] + w[k]).collect();
            let rq = q.as_ref().map(|(v, _)| v + wq).unwrap_or(0.0);
            let re: Vec<f64> = self
                .eqs
                .iter()
                .map(|e| sparse_dot(&e.coefs, &x) - e.rhs)
                .collect();
            let mu = if ncomp > 0.0 {
                (dot(&w, &lam) + wq * lq) / ncomp
            } else {
                0.0
            };
            let dual_res = grad.iter().fold(0.0f64, |a, v| a.max(v.abs())) / (1.0 + lin_norm);
            let prim_res = r
                .iter()
                .chain(re.iter())
                .chain(std::iter::once(&rq))
                .fold(0.0f64, |a, v| a.max(v.abs()));
            let obj = dot(&qx, &x) + dot(&self.linear, &x);
            let kkt = dual_res.max(prim_res).max(mu / (1.0 + obj.abs()));
            if kkt < best.4 {
                best = (x.clone(), lam.clone(), nu.clone(), lq, kkt);
            }
            if kkt <= settings.tol {
                out.converged = true;
                break;
            }
            if kkt < 0.9 * best_kkt {
                best_kkt = kkt;
                last_gain = iter;
            } else if iter - last_gain >= 10 && kkt <= NEAR_OPTIMAL_FACTOR * settings.tol {
                break;
            }
            if !has_q && x.iter().any(|v| v.abs() > 1e12) {
                out.unbounded = true;
                break;
            }

            let mut h = Mat::from_fn(n, n, |i, j| 2.0 * self.quad[(i, j)]);
            if let (Some((p, _)), true) = (self.cutoff_with_slack(), has_q) {
                for j in 0..n.min(p.ncols()) {
                    for i in 0..n.min(p.nrows()) {
                        h[(i, j)] += 2.0 * lq * p[(i, j)];
                    }
                }
            }
            for (k, gk) in self.ineqs.iter().enumerate() {
                let d = lam[k] / w[k];
                for &(i, vi) in &gk.coefs {
                    for &(j, vj) in &gk.coefs {
                        h[(i, j)] += d * vi * vj;
                    }
                }
            }
            if let Some((_, gg)) = &q {
                let d = lq / wq;
                for j in 0..n {
                    if gg[j] == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        h[(i, j)] += d * gg[i] * gg[j];
                    }
                }
            }
            let hmax = (0..n).map(|i| h[(i, i)].abs()).fold(1e-300, f64::max);
            let mut reg = 1e-13 * hmax;
            let factor = loop {
                let mut hr = h.clone();
                for i in 0..n {
                    hr[(i, i)] += reg;
                }
                match hr.llt(Side::Lower) {
                    Ok(f) => break Some(f),
                    Err(_) if reg < hmax => reg = (reg * 100.0).max(1e-12),
                    Err(_) => break None,
                }
            };
            let Some(factor) = factor else {
                break;
            };
            // Schur complement for the equality rows.
            let ht_e: Vec<Vec<f64>> = self
                .eqs
                .iter()
                .map(|e| {
                    let mut col = Mat::<f64>::zeros(n, 1);
                    for &(i, v) in &e.coefs {
                        col[(i, 0)] += v;
                    }
                    let s = factor.solve(&col);
                    (0..n).map(|i| s[(i, 0)]).collect()
                })
                .collect();
            let schur = Mat::from_fn(me, me, |a, b| sparse_dot(&self.eqs[a].coefs, &ht_e[b]));
            let schur_f = if me > 0 {
                let smax = (0..me).map(|i| schur[(i, i)].abs()).fold(1e-300, f64::max);
                let mut sr = schur.clone();
                let mut sreg = 1e-14 * smax;
                loop {
                    match sr.llt(Side::Lower) {
                        Ok(f) => break Some(f),
                        Err(_) if sreg < smax => {
                            for i in 0..me {
                                sr[(i, i)] += sreg;
                            }
                            sreg *= 100.0;
                        }
                        Err(_) => break None,
                    }
                }
            } else {
                None
            };
            if me > 0 && schur_f.is_none() {
                break;
            }

            let direction = |rc: &[f64], rcq: f64| {
                let mut rhs: Vec<f64> = grad.iter().map(|v| -v).collect();
                for (k, gk) in self.ineqs.iter().enumerate() {
                    let f = (rc[k] + lam[k] * r[k]) / w[k];
                    for &(i, v) in &gk.coefs {
                        rhs[i] -= v * f;
                    }
                }
                if let Some((_, gg)) = &q {
                    let f = (rcq + lq * rq) / wq;
                    for i in 0..n {
                        rhs[i] -= gg[i] * f;
                    }
                }
                let rhs_mat = Mat::from_fn(n, 1, |i, _| rhs[i]);
                let hr = factor.solve(&rhs_mat);
                let hr: Vec<f64> = (0..n).map(|i| hr[(i, 0)]).collect();
                let mut dnu = vec![0.0; me];
                let mut dx = hr.clone();
                if let Some(sf) = &schur_f {
                    // E dx = -re with dx = H⁻¹(rhs - Eᵀ dnu)
                    let t = Mat::from_fn(me, 1, |a, _| sparse_dot(&self.eqs[a].coefs, &hr) + re[a]);
                    let s = sf.solve(&t);
                    for a in 0..me {
                        dnu[a] = s[(a, 0)];
                        for i in 0..n {
                            dx[i] -= ht_e[a][i] * dnu[a];
                        }
                    }
                }
                let mut dw = vec![0.0; mi];
                let mut dl = vec![0.0; mi];
                for (k, gk) in self.ineqs.iter().enumerate() {
                    dw[k] = -r[k] - sparse_dot(&gk.coefs, &dx);
                    dl[k] = (rc[k] - lam[k] * dw[k]) / w[k];
                }
                let (mut dwq, mut dlq) = (0.0, 0.0);
                if let Some((_, gg)) = &q {
                    dwq = -rq - dot(gg, &dx);
                    dlq = (rcq - lq * dwq) / wq;
                }
                (dx, dnu, dw, dl, dwq, dlq)
            };
            let max_step = |dw: &[f64], dl: &[f64], dwq: f64, dlq: f64| {
                let mut a = 1.0f64;
                for k in 0..mi {
                    if dw[k] < 0.0 {
                        a = a.min(-w[k] / dw[k]);
                    }
                    if dl[k] < 0.0 {
                        a = a.min(-lam[k] / dl[k]);
                    }
                }
                if has_q {
                    if dwq < 0.0 {
                        a = a.min(-wq / dwq);
                    }
                    if dlq < 0.0 {
                        a = a.min(-lq / dlq);
                    }
                }
                a
            };

            let rc0: Vec<f64> = (0..mi).map(|k| -w[k] * lam[k]).collect();
            let (_, _, dw_a, dl_a, dwq_a, dlq_a) = direction(&rc0, -wq * lq);
            let a_aff = max_step(&dw_a, &dl_a, dwq_a, dlq_a);
            let sigma = if ncomp > 0.0 {
                let mut mu_aff = 0.0;
                for k in 0..mi {
                    mu_aff += (w[k] + a_aff * dw_a[k]) * (lam[k] + a_aff * dl_a[k]);
                }
                if has_q {
                    mu_aff += (wq + a_aff * dwq_a) * (lq + a_aff * dlq_a);
                }
                mu_aff /= ncomp;
                (mu_aff / mu).max(0.0).powi(3).min(1.0)
            } else {
                0.0
            };
            let rc: Vec<f64> = (0..mi)
                .map(|k| (sigma * mu).max(mu_floor) - w[k] * lam[k] - dw_a[k] * dl_a[k])
                .collect();
            let rcq = (sigma * mu).max(mu_floor) - wq * lq - dwq_a * dlq_a;
            let (dx, dnu, dw, dl, dwq, dlq) = direction(&rc, rcq);
            let alpha = (0.99 * max_step(&dw, &dl, dwq, dlq)).min(1.0);
            if alpha < 1e-12 {
                small_steps += 1;
                if small_steps > 5 {
                    break;
                }
            }
            for i in 0..n {
                x[i] += alpha * dx[i];
            }
            for k in 0..mi {
                w[k] += alpha * dw[k];
                lam[k] += alpha * dl[k];
            }
            for a in 0..me {
                nu[a] += alpha * dnu[a];
            }
            if has_q {
                wq += alpha * dwq;
                lq += alpha * dlq;
            }
            out.iterations = iter + 1;
        }
        if out.converged {
            out.kkt = best.4.min(out.kkt);
            (out.x, out.lam, out.nu, out.lam_q) = (x, lam, nu, lq);
        } else {
            (out.x, out.lam, out.nu, out.lam_q, out.kkt) = best;
        }
        out
    }
}

/// Solves a convex QP/QCQP. Returns `Err` only for malformed models or an
/// objective that is unbounded below.
pub fn solve_qp(model: &QpModel, settings: &QpSettings) -> Result<QpSolution, ModelError> {
    model.validate()?;
    let n = model.dim();
    let infeasible = |iterations| QpSolution {
        status: Status::Infeasible,
        x: vec![f64::NAN; n],
        objective: f64::INFINITY,
        row_duals: vec![0.0; model.rows.len()],
        lower_duals: vec![0.0; n],
        upper_duals: vec![0.0; n],
        cutoff_dual: 0.0,
        iterations,
        kkt_residual: f64::INFINITY,
    };
    if (0..n).any(|i| model.lower[i] > model.upper[i]) {
        return Ok(infeasible(0));
    }
    let (inner, _) = Inner::from_model(model);
    let out = inner.run(settings, false);
    if out.unbounded {
        return Err(ModelError::Unbounded);
    }
    // Stalls a few digits short of the target are accepted.
    let near = out.kkt <= NEAR_OPTIMAL_FACTOR * settings.tol;
    let mut status = if out.converged || near {
        Status::Optimal
    } else {
        Status::NumericalFailure
    };
    if status != Status::Optimal {
        let p1 = inner.phase_one();
        let o1 = p1.run(settings, true);
        let t = o1.x[n];
        if o1.converged && t > 1e-7 {
            return Ok(infeasible(out.iterations + o1.iterations));
        }
        if !o1.converged && t > 1e-3 {
            status = Status::Infeasible;
        }
    }
    let mut row_duals = vec![0.0; model.rows.len()];
    let mut lower_duals = vec![0.0; n];
    let mut upper_duals = vec![0.0; n];
    for (g, &l) in inner.ineqs.iter().zip(&out.lam) {
        let v = l * g.back;
        match g.origin {
            Origin::Lower(i) => lower_duals[i] = v,
            Origin::Upper(i) => upper_duals[i] = v,
            Origin::Row(k) => row_duals[k] = v,
            Origin::Extra => {}
        }
    }
    for (e, &v) in inner.eqs.iter().zip(&out.nu) {
        if let Some(k) = e.row {
            row_duals[k] = v * e.back;
        }
    }
    let cutoff_dual = inner.cutoff.as_ref().map(|c| out.lam_q * c.2).unwrap_or(0.0);
    Ok(QpSolution {
        status,
        objective: model.evaluate(&out.x),
        x: out.x,
        row_duals,
        lower_duals,
        upper_duals,
        cutoff_dual,
        iterations: out.iterations,
        kkt_residual: out.kkt,
    })
}
