//! Primal-dual interior-point method for
//!
//! ```text
//! min <C, Y>  s.t.  a_i(Y) {>=, <=, =} b_i,  Y PSD
//! ```
//!
//! using the HKM search direction with a Mehrotra predictor-corrector and an
//! infeasible starting point. Inequality rows carry explicit slacks.

use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::{Col, Mat, Side};

use crate::dense::{
    cholesky, dot, frob_dot, frob_norm, max_orthant_step, max_psd_step, norm2, spd_inverse,
    symmetrize, to_dense_vec,
};
use crate::{ModelError, Sense, Status};

/// Position of a row inside its [`SdpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

/// A linear row over block entries. Each term `(r, c, v)` contributes
/// `v * Y[r, c]`; off-diagonal entries are not doubled.
#[derive(Debug, Clone)]
pub struct SdpRow<T> {
    pub terms: Vec<(usize, usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: T,
}

impl<T> SdpRow<T> {
    pub fn activity(&self, y: &Mat<f64>) -> f64 {
        self.terms.iter().map(|&(r, c, v)| v * y[(r, c)]).sum()
    }

    /// Nonnegative when the row holds; the distance to its bound otherwise.
    pub fn slack(&self, y: &Mat<f64>) -> f64 {
        let a = self.activity(y);
        match self.sense {
            Sense::Ge => a - self.rhs,
            Sense::Le => self.rhs - a,
            Sense::Eq => -(a - self.rhs).abs(),
        }
    }
}

/// Linear SDP over one PSD block with tagged constraint rows.
#[derive(Debug, Clone)]
pub struct SdpModel<T> {
    dim: usize,
    objective: Mat<f64>,
    rows: Vec<SdpRow<T>>,
}

impl<T: Clone> SdpModel<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            objective: Mat::zeros(dim, dim),
            rows: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sets `C[r, c] = C[c, r] = v` in the objective `<C, Y>`.
    pub fn set_objective(&mut self, r: usize, c: usize, v: f64) {
        self.objective[(r, c)] = v;
        self.objective[(c, r)] = v;
    }

    pub fn objective(&self) -> &Mat<f64> {
        &self.objective
    }

    pub fn add_row(
        &mut self,
        terms: Vec<(usize, usize, f64)>,
        sense: Sense,
        rhs: f64,
        tag: T,
    ) -> RowId {
        self.rows.push(SdpRow {
            terms,
            sense,
            rhs,
            tag,
        });
        RowId(self.rows.len() - 1)
    }

    pub fn rows(&self) -> &[SdpRow<T>] {
        &self.rows
    }

    pub fn row(&self, id: RowId) -> &SdpRow<T> {
        &self.rows[id.0]
    }

    /// Objective value `<C, Y>` of a candidate block.
    pub fn evaluate(&self, y: &Mat<f64>) -> f64 {
        frob_dot(&self.objective, y)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.objective.nrows() != self.dim {
            return Err(ModelError::Dimension("objective size".into()));
        }
        for j in 0..self.dim {
            if self.objective.col_as_slice(j).iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite("objective"));
            }
        }
        for (k, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(ModelError::NonFinite("row rhs"));
            }
            for &(r, c, v) in &row.terms {
                if r >= self.dim || c >= self.dim {
                    return Err(ModelError::EntryOutOfRange {
                        row: k,
                        r,
                        c,
                        dim: self.dim,
                    });
                }
                if !v.is_finite() {
                    return Err(ModelError::NonFinite("row coefficient"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SdpSettings {
    /// Relative tolerance on primal/dual infeasibility and duality gap.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 120,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: Status,
    /// Full primal block `Y`.
    pub block: Mat<f64>,
    /// Dual objective `bᵀy`, the lower bound reported to callers.
    pub objective: f64,
    pub primal_objective: f64,
    /// One multiplier per row; inequality multipliers are nonnegative.
    pub duals: Vec<f64>,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub relative_gap: f64,
    pub solve_seconds: f64,
}

impl SdpSolution {
    pub fn dual(&self, id: RowId) -> f64 {
        self.duals[id.0]
    }

    /// Splits an arrow block `[[X, x], [xᵀ, 1]]` into `(x, X)`.
    pub fn arrow(&self) -> (Vec<f64>, Mat<f64>) {
        let n = self.block.nrows() - 1;
        let x = (0..n).map(|i| self.block[(i, n)]).collect();
        let xx = Mat::from_fn(n, n, |i, j| self.block[(i, j)]);
        (x, xx)
    }
}

/// A row in solver form: symmetric coefficient entries listed in full,
/// scaled to unit Frobenius norm, `>=` rows carry a slack.
struct NormRow {
    ent: Vec<(usize, usize, f64)>,
    rhs: f64,
    slack: Option<usize>,
    /// Multiplier converting an internal dual into the reported one.
    back: f64,
    cols: Vec<usize>,
}

impl NormRow {
    fn apply(&self, w: &[f64], n: usize) -> f64 {
        self.ent.iter().map(|&(p, q, a)| a * w[p + q * n]).sum()
    }
}

fn normalize_rows<T>(rows: &[SdpRow<T>], c_scale: f64) -> Vec<NormRow> {
    let mut out = Vec::with_capacity(rows.len());
    let mut nslack = 0;
    for row in rows {
        let mut merged: Vec<((usize, usize), f64)> = Vec::with_capacity(row.terms.len());
        for &(r, c, v) in &row.terms {
            let key = (r.min(c), r.max(c));
            match merged.iter_mut().find(|(k, _)| *k == key) {
                Some((_, acc)) => *acc += v,
                None => merged.push((key, v)),
            }
        }
        let mut ent = Vec::with_capacity(2 * merged.len());
        for ((r, c), v) in merged {
            if v == 0.0 {
                continue;
            }
            if r == c {
                ent.push((r, r, v));
            } else {
                ent.push((r, c, 0.5 * v));
                ent.push((c, r, 0.5 * v));
            }
        }
        ent.sort_by_key(|e| (e.0, e.1));
        let norm = ent.iter().map(|e| e.2 * e.2).sum::<f64>().sqrt().max(1e-300);
        let sign = if row.sense == Sense::Le { -1.0 } else { 1.0 };
        for e in &mut ent {
            e.2 *= sign / norm;
        }
        let slack = if row.sense == Sense::Eq {
            None
        } else {
            nslack += 1;
            Some(nslack - 1)
        };
        let mut cols: Vec<usize> = ent.iter().map(|e| e.0).collect();
        cols.sort_unstable();
        cols.dedup();
        out.push(NormRow {
            ent,
            rhs: sign * row.rhs / norm,
            slack,
            back: c_scale / norm,
            cols,
        });
    }
    out
}

struct Iterate {
    y_mat: Mat<f64>,
    z_mat: Mat<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
    z: Vec<f64>,
}

struct Direction {
    dy_mat: Mat<f64>,
    dz_mat: Mat<f64>,
    dy: Vec<f64>,
    ds: Vec<f64>,
    dz: Vec<f64>,
}

struct Work<'a> {
    n: usize,
    rows: &'a [NormRow],
    slack_row: Vec<usize>,
}

impl Work<'_> {
    fn at_y(&self, y: &[f64]) -> Mat<f64> {
        let mut m = Mat::zeros(self.n, self.n);
        for (row, &yi) in self.rows.iter().zip(y) {
            if yi == 0.0 {
                continue;
            }
            for &(p, q, a) in &row.ent {
                m[(p, q)] += a * yi;
            }
        }
        m
    }

    /// Schur complement `M_ij = <A_i, Y A_j Z⁻¹>` plus the slack diagonal.
    fn schur(&self, y_mat: &Mat<f64>, zinv: &Mat<f64>, s: &[f64], z: &[f64]) -> Mat<f64> {
        let n = self.n;
        let m = self.rows.len();
        let yv = to_dense_vec(y_mat);
        let ziv = to_dense_vec(zinv);
        let total_nnz: usize = self.rows.iter().map(|r| r.ent.len()).sum();
        let dense: Vec<bool> = self
            .rows
            .iter()
            .map(|r| {
                let dense_cost = (n * n * r.cols.len()) as f64 / 20.0;
                let sparse_cost = (r.ent.len() * total_nnz) as f64;
                dense_cost < sparse_cost
            })
            .collect();
        let mut big = Mat::<f64>::zeros(m, m);
        // G = Y A_i Z⁻¹, column-major; each entry of A_i adds a rank-one term.
        let mut g = vec![0.0; n * n];
        let mut zrow = vec![0.0; n];
        for (i, ri) in self.rows.iter().enumerate() {
            if !dense[i] {
                continue;
            }
            g.iter_mut().for_each(|v| *v = 0.0);
            // Entries are sorted by p: G += Y[:, p] · (Σ_q a Z⁻¹[q, :]).
            let mut k = 0;
            while k < ri.ent.len() {
                let p = ri.ent[k].0;
                zrow.iter_mut().for_each(|v| *v = 0.0);
                while k < ri.ent.len() && ri.ent[k].0 == p {
                    let (_, q, a) = ri.ent[k];
                    for (c, zc) in zrow.iter_mut().enumerate() {
                        *zc += a * ziv[q + c * n];
                    }
                    k += 1;
                }
                let ycol = &yv[p * n..(p + 1) * n];
                for (c, &zc) in zrow.iter().enumerate() {
                    if zc == 0.0 {
                        continue;
                    }
                    let gcol = &mut g[c * n..(c + 1) * n];
                    for (gv, &yr) in gcol.iter_mut().zip(ycol) {
                        *gv += yr * zc;
                    }
                }
            }
            for (j, rj) in self.rows.iter().enumerate() {
                if dense[j] && j < i {
                    continue;
                }
                let v: f64 = rj.ent.iter().map(|&(r, s, b)| b * g[r + s * n]).sum();
                big[(i, j)] = v;
                big[(j, i)] = v;
            }
        }
        for i in 0..m {
            if dense[i] {
                continue;
            }
            let ri = &self.rows[i].ent;
            for j in i..m {
                if dense[j] {
                    continue;
                }
                let rj = &self.rows[j].ent;
                let mut v = 0.0;
                for &(p, q, a) in ri {
                    let yq = q;
                    let zp = p * n;
                    let mut inner = 0.0;
                    for &(r, s, b) in rj {
                        inner += b * yv[yq + r * n] * ziv[s + zp];
                    }
                    v += a * inner;
                }
                big[(i, j)] = v;
                big[(j, i)] = v;
            }
        }
        for (k, &i) in self.slack_row.iter().enumerate() {
            big[(i, i)] += s[k] / z[k];
        }
        big
    }
}

struct Residuals {
    rp: Vec<f64>,
    rd: Mat<f64>,
    rds: Vec<f64>,
}

/// Solves a linear SDP. Model errors are returned as `Err`; infeasibility and
/// numerical trouble are reported through [`SdpSolution::status`].
pub fn solve_sdp<T: Clone>(
    model: &SdpModel<T>,
    settings: &SdpSettings,
) -> Result<SdpSolution, ModelError> {
    model.validate()?;
    let start = Instant::now();
    let n = model.dim;
    let c_scale = frob_norm(&model.objective).max(1.0);
    let cs = Mat::from_fn(n, n, |i, j| model.objective[(i, j)] / c_scale);
    let rows = normalize_rows(&model.rows, c_scale);
    let m = rows.len();
    let slack_row: Vec<usize> = (0..m).filter(|&i| rows[i].slack.is_some()).collect();
    let ns = slack_row.len();
    let work = Work {
        n,
        rows: &rows,
        slack_row: slack_row.clone(),
    };
    let b: Vec<f64> = rows.iter().map(|r| r.rhs).collect();
    let b_norm = norm2(&b);
    let c_norm = frob_norm(&cs);
    let nu = (n + ns) as f64;

    let bmax = b.iter().fold(0.0f64, |acc, v| acc.max(1.0 + v.abs()));
    let xi = 10f64.max((n as f64).sqrt()).max(n as f64 * bmax / 2.0);
    let eta = 10f64.max((n as f64).sqrt()).max(1.0 + c_norm);
    let mut it = Iterate {
        y_mat: Mat::from_fn(n, n, |i, j| if i == j { xi } else { 0.0 }),
        z_mat: Mat::from_fn(n, n, |i, j| if i == j { eta } else { 0.0 }),
        y: vec![0.0; m],
        s: vec![xi; ns],
        z: vec![eta; ns],
    };

    let mut status = Status::NumericalFailure;
    let mut iterations = 0;
    let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut pobj = 0.0;
    let mut dobj = 0.0;
    let mut stalls = 0;
    let (mut best_worst, mut best_iter) = (f64::INFINITY, 0);

    for iter in 0..settings.max_iter {
        iterations = iter;
        let yv = to_dense_vec(&it.y_mat);
        let mut rp = vec![0.0; m];
        for (i, row) in rows.iter().enumerate() {
            rp[i] = row.rhs - row.apply(&yv, n);
            if let Some(k) = row.slack {
                rp[i] += it.s[k];
            }
        }
        let aty = work.at_y(&it.y);
        let rd = Mat::from_fn(n, n, |i, j| cs[(i, j)] - aty[(i, j)] - it.z_mat[(i, j)]);
        let rds: Vec<f64> = slack_row
            .iter()
            .enumerate()
            .map(|(k, &i)| it.y[i] - it.z[k])
            .collect();
        pobj = frob_dot(&cs, &it.y_mat);
        dobj = dot(&b, &it.y);
        let mu = (frob_dot(&it.y_mat, &it.z_mat) + dot(&it.s, &it.z)) / nu;
        let pinf = norm2(&rp) / (1.0 + b_norm);
        let rd_norm = (frob_norm(&rd).powi(2) + norm2(&rds).powi(2)).sqrt();
        let dinf = rd_norm / (1.0 + c_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        last = (pinf, dinf, gap);
        if pinf <= settings.tol && dinf <= settings.tol && gap <= settings.tol {
            status = Status::Optimal;
            break;
        }
        let worst = pinf.max(dinf).max(gap);
        if worst < 0.7 * best_worst {
            best_worst = worst;
            best_iter = iter;
        } else if iter - best_iter >= 5 && pinf.max(dinf) <= settings.tol && gap <= 1e2 * settings.tol {
            // Feasible and stagnating a little short of the gap target.
            break;
        }
        // Primal infeasibility shows up as an unbounded dual ray.
        if dobj > 1e3 && (c_norm + rd_norm) / dobj < 1e-8 && dinf < 1e-3 * dobj {
            status = Status::Infeasible;
            break;
        }
        if pobj < -1e10 && pinf < 1e-3 {
            break;
        }

        let Some(zinv) = spd_inverse(&it.z_mat) else {
            break;
        };
        let Some(ychol) = cholesky(&it.y_mat) else {
            break;
        };
        let Some(zchol) = cholesky(&it.z_mat) else {
            break;
        };
        let mut schur = work.schur(&it.y_mat, &zinv, &it.s, &it.z);
        let mut factor = schur.llt(Side::Lower);
        let mut reg = 1e-14;
        while factor.is_err() && reg < 1e-4 {
            let dmax = (0..m).map(|i| schur[(i, i)].abs()).fold(1e-300, f64::max);
            for i in 0..m {
                schur[(i, i)] += reg * dmax;
            }
            factor = schur.llt(Side::Lower);
            reg *= 100.0;
        }
        let Ok(factor) = factor else {
            break;
        };
        let res = Residuals { rp, rd, rds };
        let yrdzinv = &(&it.y_mat * &res.rd) * &zinv;
        let solve_dir = |sigma_mu: f64, q: Option<&Mat<f64>>, corr_s: &[f64]| -> Direction {
            let qz = q.map(|q| q * &zinv);
            let mut t = Mat::from_fn(n, n, |i, j| {
                sigma_mu * zinv[(i, j)] - it.y_mat[(i, j)] - yrdzinv[(i, j)]
            });
            if let Some(qz) = &qz {
                t -= qz;
            }
            let tv = to_dense_vec(&t);
            let mut rhs = Col::<f64>::zeros(m);
            for (i, row) in rows.iter().enumerate() {
                let mut v = res.rp[i] - row.apply(&tv, n);
                if let Some(k) = row.slack {
                    let (s, z) = (it.s[k], it.z[k]);
                    v += (sigma_mu - s * z - corr_s[k]) / z - s / z * res.rds[k];
                }
                rhs[i] = v;
            }
            let dy_col = factor.solve(&rhs);
            let dy: Vec<f64> = (0..m).map(|i| dy_col[i]).collect();
            let atdy = work.at_y(&dy);
            let dz_mat = &res.rd - &atdy;
            let ydz = &(&it.y_mat * &dz_mat) * &zinv;
            let mut dy_mat = Mat::from_fn(n, n, |i, j| {
                sigma_mu * zinv[(i, j)] - it.y_mat[(i, j)] - ydz[(i, j)]
            });
            if let Some(qz) = &qz {
                dy_mat -= qz;
            }
            symmetrize(&mut dy_mat);
            let mut dz = vec![0.0; ns];
            let mut ds = vec![0.0; ns];
            for (k, &i) in slack_row.iter().enumerate() {
                dz[k] = res.rds[k] + dy[i];
                ds[k] = (sigma_mu - it.s[k] * it.z[k] - corr_s[k] - it.s[k] * dz[k]) / it.z[k];
            }
            Direction {
                dy_mat,
                dz_mat,
                dy,
                ds,
                dz,
            }
        };
        let steps = |d: &Direction| -> (f64, f64) {
            let ap = max_psd_step(ychol.as_ref(), &d.dy_mat).min(max_orthant_step(&it.s, &d.ds));
            let ad = max_psd_step(zchol.as_ref(), &d.dz_mat).min(max_orthant_step(&it.z, &d.dz));
            (ap, ad)
        };

        let zero = vec![0.0; ns];
        let pred = solve_dir(0.0, None, &zero);
        let (ap, ad) = steps(&pred);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let ny = &it.y_mat + &pred.dy_mat * faer::Scale(ap);
        let nz = &it.z_mat + &pred.dz_mat * faer::Scale(ad);
        let mut mu_aff = frob_dot(&ny, &nz);
        for k in 0..ns {
            mu_aff += (it.s[k] + ap * pred.ds[k]) * (it.z[k] + ad * pred.dz[k]);
        }
        mu_aff /= nu;
        let expon = (3.0 * ap.min(ad).powi(2)).max(1.0);
        let sigma = (mu_aff / mu).max(0.0).powf(expon).min(1.0);

        let q = &pred.dy_mat * &pred.dz_mat;
        let corr: Vec<f64> = (0..ns).map(|k| pred.ds[k] * pred.dz[k]).collect();
        let dir = solve_dir(sigma * mu, Some(&q), &corr);
        let (ap2, ad2) = steps(&dir);
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let ap2 = (gamma * ap2).min(1.0);
        let ad2 = (gamma * ad2).min(1.0);
        if ap2 < 1e-9 && ad2 < 1e-9 {
            stalls += 1;
            if stalls > 3 {
                break;
            }
        } else {
            stalls = 0;
        }

        it.y_mat += &dir.dy_mat * faer::Scale(ap2);
        symmetrize(&mut it.y_mat);
        it.z_mat += &dir.dz_mat * faer::Scale(ad2);
        symmetrize(&mut it.z_mat);
        for i in 0..m {
            it.y[i] += ad2 * dir.dy[i];
        }
        for k in 0..ns {
            it.s[k] += ap2 * dir.ds[k];
            it.z[k] += ad2 * dir.dz[k];
        }
        iterations = iter + 1;
    }

    let duals = rows
        .iter()
        .zip(&it.y)
        .map(|(r, &y)| {
            let v = y * r.back;
            if r.slack.is_some() {
                v.max(0.0)
            } else {
                v
            }
        })
        .collect();
    Ok(SdpSolution {
        status,
        block: it.y_mat,
        objective: dobj * c_scale,
        primal_objective: pobj * c_scale,
        duals,
        iterations,
        primal_infeasibility: last.0,
        dual_infeasibility: last.1,
        relative_gap: last.2,
        solve_seconds: start.elapsed().as_secs_f64(),
    })
}
