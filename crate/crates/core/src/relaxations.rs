//! Lower bounds: the convex QP, the Lagrangian QP, the box-strengthened SDP
//! and the cutting-plane loop adding RLT inequalities.

use std::cmp::Ordering;

use faer::{Mat, Side};
use s3vm_conic::{
    solve_qp, solve_sdp, LinearRow, QpModel, QpSettings, SdpModel, SdpSettings, Sense, Status,
};

use crate::problem::{percentage_gap, BoxBounds, ProblemData};
use crate::{Result, S3vmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowTag {
    /// Corner entry of the arrow block fixed to one.
    Corner,
    BoxLower(usize),
    BoxUpper(usize),
    DiagLower(usize),
    DiagUpper(usize),
    Balancing,
    /// Index into the cut pool the model was built from.
    Rlt(usize),
    Product(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RltVariant {
    LowerLower,
    UpperUpper,
    LowerUpper,
    UpperLower,
}

impl RltVariant {
    pub const ALL: [RltVariant; 4] = [
        RltVariant::LowerLower,
        RltVariant::UpperUpper,
        RltVariant::LowerUpper,
        RltVariant::UpperLower,
    ];
}

/// Product of two bound residuals, linearized:
/// `σ (X_ij - a_j x_i - a_i x_j + a_i a_j) >= 0`
/// with `σ = +1` for same-side products and `-1` otherwise. `a_i`, `a_j` are
/// the bounds frozen when the cut was generated.
#[derive(Debug, Clone, PartialEq)]
pub struct RltCut {
    pub i: usize,
    pub j: usize,
    pub variant: RltVariant,
    pub a_i: f64,
    pub a_j: f64,
}

impl RltCut {
    /// `None` when a bound the variant needs is infinite.
    pub fn from_boxes(i: usize, j: usize, variant: RltVariant, boxes: &BoxBounds) -> Option<Self> {
        let (a_i, a_j) = match variant {
            RltVariant::LowerLower => (boxes.lower[i], boxes.lower[j]),
            RltVariant::UpperUpper => (boxes.upper[i], boxes.upper[j]),
            RltVariant::LowerUpper => (boxes.lower[i], boxes.upper[j]),
            RltVariant::UpperLower => (boxes.upper[i], boxes.lower[j]),
        };
        (a_i.is_finite() && a_j.is_finite()).then_some(Self {
            i,
            j,
            variant,
            a_i,
            a_j,
        })
    }

    fn sigma(&self) -> f64 {
        match self.variant {
            RltVariant::LowerLower | RltVariant::UpperUpper => 1.0,
            RltVariant::LowerUpper | RltVariant::UpperLower => -1.0,
        }
    }

    /// Nonnegative iff the cut holds at `(x, X)`.
    pub fn slack(&self, x: &[f64], xx: &Mat<f64>) -> f64 {
        let (i, j) = (self.i, self.j);
        self.sigma() * (xx[(i, j)] - self.a_j * x[i] - self.a_i * x[j] + self.a_i * self.a_j)
    }

    /// Row in `>=` form over the arrow block of dimension `n + 1`.
    pub fn row(&self, n: usize) -> (Vec<(usize, usize, f64)>, f64) {
        let s = self.sigma();
        (
            vec![
                (self.i, self.j, s),
                (self.i, n, -s * self.a_j),
                (self.j, n, -s * self.a_i),
            ],
            -s * self.a_i * self.a_j,
        )
    }
}

/// An equality row over the arrow block.
#[derive(Debug, Clone)]
pub struct ProductRow {
    pub j: usize,
    pub terms: Vec<(usize, usize, f64)>,
    pub rhs: f64,
}

impl ProductRow {
    pub fn residual(&self, x: &[f64], xx: &Mat<f64>) -> f64 {
        let n = x.len();
        self.terms
            .iter()
            .map(|&(r, c, v)| {
                let e = if c == n { x[r] } else { xx[(r, c)] };
                v * e
            })
            .sum::<f64>()
            - self.rhs
    }
}

/// Balancing equality multiplied by each `x_j`:
/// `(1/(n-l)) Σ_{i unlabeled} X_ij = r x_j`.
pub fn balancing_product_cuts(p: &ProblemData) -> Vec<ProductRow> {
    if !p.balancing_enabled() {
        return Vec::new();
    }
    let (n, l) = (p.n(), p.l());
    let w = 1.0 / (n - l) as f64;
    (0..n)
        .map(|j| {
            let mut terms: Vec<(usize, usize, f64)> = (l..n).map(|i| (i.min(j), i.max(j), w)).collect();
            terms.push((j, n, -p.balancing_rhs()));
            ProductRow { j, terms, rhs: 0.0 }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedRow {
    pub tag: RowTag,
    pub rhs: f64,
    /// Primal slack at the solution; zero means active.
    pub slack: f64,
    pub dual: f64,
}

/// A solved arrow relaxation.
#[derive(Debug, Clone)]
pub struct RelaxedSolution {
    pub x: Vec<f64>,
    pub xx: Mat<f64>,
    /// Lower bound reported by the SDP backend.
    pub objective: f64,
    pub rows: Vec<TaggedRow>,
    pub ipm_iterations: usize,
}

#[derive(Debug, Clone)]
pub enum SdpOutcome {
    Solved(RelaxedSolution),
    Infeasible,
    Failed(String),
}

/// Box rows, diagonal rows `1 <= X_ii <= max(L², U²)` and the balancing row
/// over the block `[[X, x], [xᵀ, 1]]`.
pub fn build_basic_sdp(p: &ProblemData, boxes: &BoxBounds) -> SdpModel<RowTag> {
    let n = p.n();
    let mut m = SdpModel::new(n + 1);
    let c = p.cost();
    for j in 0..n {
        for i in 0..=j {
            m.set_objective(i, j, c[(i, j)]);
        }
    }
    m.add_row(vec![(n, n, 1.0)], Sense::Eq, 1.0, RowTag::Corner);
    for i in 0..n {
        let (lo, up) = (boxes.lower[i], boxes.upper[i]);
        if lo.is_finite() {
            m.add_row(vec![(i, n, 1.0)], Sense::Ge, lo, RowTag::BoxLower(i));
        }
        if up.is_finite() {
            m.add_row(vec![(i, n, 1.0)], Sense::Le, up, RowTag::BoxUpper(i));
        }
        m.add_row(vec![(i, i, 1.0)], Sense::Ge, 1.0, RowTag::DiagLower(i));
        if lo.is_finite() && up.is_finite() {
            m.add_row(vec![(i, i, 1.0)], Sense::Le, (lo * lo).max(up * up), RowTag::DiagUpper(i));
        }
    }
    if p.balancing_enabled() {
        let w = 1.0 / p.unlabeled_count() as f64;
        let terms = (p.l()..n).map(|i| (i, n, w)).collect();
        m.add_row(terms, Sense::Eq, p.balancing_rhs(), RowTag::Balancing);
    }
    m
}

pub fn add_cut_rows(model: &mut SdpModel<RowTag>, pool: &[RltCut]) {
    let n = model.dim() - 1;
    for (k, cut) in pool.iter().enumerate() {
        let (terms, rhs) = cut.row(n);
        model.add_row(terms, Sense::Ge, rhs, RowTag::Rlt(k));
    }
}

pub fn add_product_rows(model: &mut SdpModel<RowTag>, rows: &[ProductRow]) {
    for r in rows {
        model.add_row(r.terms.clone(), Sense::Eq, r.rhs, RowTag::Product(r.j));
    }
}

/// Cheap certificates that the box-restricted feasible set is empty.
pub fn boxes_infeasible(p: &ProblemData, boxes: &BoxBounds) -> bool {
    let n = p.n();
    for i in 0..n {
        let (lo, up) = (boxes.lower[i], boxes.upper[i]);
        if lo > up || (lo > -1.0 && up < 1.0) {
            return true;
        }
    }
    if p.balancing_enabled() {
        let target = p.balancing_rhs() * p.unlabeled_count() as f64;
        let lo: f64 = boxes.lower[p.l()..].iter().sum();
        let up: f64 = boxes.upper[p.l()..].iter().sum();
        let slack = 1e-9 * (1.0 + target.abs());
        if lo > target + slack || up < target - slack {
            return true;
        }
    }
    false
}

/// Solves an arrow SDP. A run that stops short of the default tolerance is
/// accepted when its residuals are within `1e-5`.
pub fn solve_arrow(model: &SdpModel<RowTag>) -> Result<SdpOutcome> {
    let sol = solve_sdp(model, &SdpSettings::default())?;
    match sol.status {
        Status::Infeasible => return Ok(SdpOutcome::Infeasible),
        Status::NumericalFailure => {
            let worst = sol
                .primal_infeasibility
                .max(sol.dual_infeasibility)
                .max(sol.relative_gap);
            if !(worst <= 1e-5) {
                return Ok(SdpOutcome::Failed(format!(
                    "sdp stalled after {} iterations (pinf {:.1e}, dinf {:.1e}, gap {:.1e})",
                    sol.iterations, sol.primal_infeasibility, sol.dual_infeasibility, sol.relative_gap
                )));
            }
        }
        Status::Optimal => {}
    }
    let (x, xx) = sol.arrow();
    let rows = model
        .rows()
        .iter()
        .zip(&sol.duals)
        .map(|(row, &dual)| TaggedRow {
            tag: row.tag,
            rhs: row.rhs,
            slack: row.slack(&sol.block),
            dual,
        })
        .collect();
    Ok(SdpOutcome::Solved(RelaxedSolution {
        x,
        xx,
        objective: sol.objective,
        rows,
        ipm_iterations: sol.iterations,
    }))
}

/// Optimal value of the basic SDP with the given boxes (`+∞` if infeasible).
pub fn basic_sdp_bound(p: &ProblemData, boxes: &BoxBounds) -> Result<f64> {
    if boxes_infeasible(p, boxes) {
        return Ok(f64::INFINITY);
    }
    match solve_arrow(&build_basic_sdp(p, boxes))? {
        SdpOutcome::Solved(s) => Ok(s.objective),
        SdpOutcome::Infeasible => Ok(f64::INFINITY),
        SdpOutcome::Failed(msg) => Err(S3vmError::Solver(msg)),
    }
}

fn box_qp(p: &ProblemData, quad: Mat<f64>, boxes: &BoxBounds) -> QpModel {
    let n = p.n();
    let mut m = QpModel::new(quad, vec![0.0; n]);
    m.lower = boxes.lower.clone();
    m.upper = boxes.upper.clone();
    if p.balancing_enabled() {
        let w = 1.0 / p.unlabeled_count() as f64;
        m.rows.push(LinearRow {
            coefs: (p.l()..n).map(|i| (i, w)).collect(),
            sense: Sense::Eq,
            rhs: p.balancing_rhs(),
        });
    }
    m
}

/// `min xᵀCx` over the boxes and the balancing row.
pub fn qp_bound(p: &ProblemData, boxes: &BoxBounds) -> Result<f64> {
    if boxes.is_empty_box() {
        return Ok(f64::INFINITY);
    }
    let sol = solve_qp(&box_qp(p, p.cost().clone(), boxes), &QpSettings::default())?;
    match sol.status {
        Status::Optimal => Ok(sol.objective),
        Status::Infeasible => Ok(f64::INFINITY),
        Status::NumericalFailure => Err(S3vmError::Solver("qp bound did not converge".into())),
    }
}

/// Multipliers of the auxiliary SDP `max eᵀλ s.t. K⁻¹ - 2 Diag(λ) PSD`,
/// `λ >= 0`, `λ_i = 0` on labeled points.
pub fn lagrangian_multipliers(p: &ProblemData) -> Result<Vec<f64>> {
    let n = p.n();
    let mut lambda = vec![0.0; n];
    if p.unlabeled_count() == 0 {
        return Ok(lambda);
    }
    // Primal of the auxiliary problem: min <K⁻¹, Y> s.t. 2 Y_ii >= 1.
    let mut m: SdpModel<usize> = SdpModel::new(n);
    let c = p.cost();
    for j in 0..n {
        for i in 0..=j {
            m.set_objective(i, j, 2.0 * c[(i, j)]);
        }
    }
    for i in p.l()..n {
        m.add_row(vec![(i, i, 2.0)], Sense::Ge, 1.0, i);
    }
    let sol = solve_sdp(&m, &SdpSettings::default())?;
    if sol.status != Status::Optimal {
        return Err(S3vmError::Solver(format!("auxiliary sdp ended with {:?}", sol.status)));
    }
    for (row, &d) in m.rows().iter().zip(&sol.duals) {
        lambda[row.tag] = d.max(0.0);
    }
    Ok(lambda)
}

/// Lagrangian bound: `min xᵀ(C - Diag λ)x + eᵀλ` over boxes and balancing.
/// Falls back to [`qp_bound`] if the auxiliary SDP fails.
pub fn qp_lagrangian_bound(p: &ProblemData, boxes: &BoxBounds) -> Result<f64> {
    if boxes.is_empty_box() {
        return Ok(f64::INFINITY);
    }
    let Ok(lambda) = lagrangian_multipliers(p) else {
        return qp_bound(p, boxes);
    };
    let n = p.n();
    let c = p.cost();
    // The multipliers sit on the PSD boundary; shrink until C - Diag(λ) factors.
    let mut theta = 1.0 - 1e-8;
    let quad = loop {
        let q = Mat::from_fn(n, n, |i, j| c[(i, j)] - if i == j { theta * lambda[i] } else { 0.0 });
        let probe = Mat::from_fn(n, n, |i, j| q[(i, j)] + if i == j { 1e-13 } else { 0.0 });
        if probe.llt(Side::Lower).is_ok() || theta < 0.5 {
            break q;
        }
        theta = 1.0 - (1.0 - theta) * 10.0;
    };
    let mut model = box_qp(p, quad, boxes);
    model.constant = theta * lambda.iter().sum::<f64>();
    let sol = solve_qp(&model, &QpSettings::default());
    match sol {
        Ok(s) if s.status == Status::Optimal => Ok(s.objective),
        Ok(s) if s.status == Status::Infeasible => Ok(f64::INFINITY),
        _ => qp_bound(p, boxes),
    }
}

/// The `max_cuts` most violated RLT cuts (violation above `viol_tol`).
pub fn separate_rlt(
    sol: &RelaxedSolution,
    boxes: &BoxBounds,
    max_cuts: usize,
    viol_tol: f64,
) -> Vec<RltCut> {
    let n = sol.x.len();
    let mut found: Vec<(f64, RltCut)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for v in RltVariant::ALL {
                if let Some(cut) = RltCut::from_boxes(i, j, v, boxes) {
                    let viol = -cut.slack(&sol.x, &sol.xx);
                    if viol > viol_tol {
                        found.push((viol, cut));
                    }
                }
            }
        }
    }
    found.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    found.truncate(max_cuts);
    found.into_iter().map(|(_, c)| c).collect()
}

/// Drops cuts whose slack at the solution exceeds `slack_tol`.
pub fn purge_inactive(pool: Vec<RltCut>, sol: &RelaxedSolution, slack_tol: f64) -> Vec<RltCut> {
    pool.into_iter()
        .filter(|c| c.slack(&sol.x, &sol.xx) <= slack_tol)
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct CutParams {
    pub max_cuts_factor: usize,
    pub viol_tol: f64,
    pub inactive_tol: f64,
    pub stall_tol: f64,
    /// Target percentage gap.
    pub gap_target: f64,
    pub product_cuts: bool,
    pub max_iterations: usize,
}

impl Default for CutParams {
    fn default() -> Self {
        Self {
            max_cuts_factor: 5,
            viol_tol: 1e-2,
            inactive_tol: 1e-4,
            stall_tol: 1e-3,
            gap_target: 0.1,
            product_cuts: false,
            max_iterations: 50,
        }
    }
}

/// New upper bound after a heuristic call, with fresh global boxes when the
/// caller recomputed them.
#[derive(Debug, Clone)]
pub struct HeuristicUpdate {
    pub upper_bound: f64,
    pub global_boxes: Option<BoxBounds>,
}

/// Callbacks run once per cutting-plane iteration.
pub trait BoundingHooks {
    /// Node-local box reduction; returns false if the box became empty.
    fn tighten(&mut self, _boxes: &mut BoxBounds, _sol: &RelaxedSolution, _ub: f64, _lb: f64) -> bool {
        true
    }

    fn heuristic(&mut self, _sol: &RelaxedSolution, ub: f64) -> HeuristicUpdate {
        HeuristicUpdate {
            upper_bound: ub,
            global_boxes: None,
        }
    }
}

/// Hooks that do nothing.
pub struct NoHooks;

impl BoundingHooks for NoHooks {}

#[derive(Debug, Clone)]
pub struct BoundResult {
    /// `+∞` when the node holds nothing better than the incumbent.
    pub lower_bound: f64,
    pub solution: Option<RelaxedSolution>,
    pub iterations: usize,
    pub active_cuts: Vec<RltCut>,
    /// Node boxes after tightening.
    pub boxes: BoxBounds,
    /// Bound after each SDP solve.
    pub lb_trace: Vec<f64>,
    pub upper_bound: f64,
}

fn gap_reached(ub: f64, lb: f64, target: f64) -> bool {
    ub.is_finite() && ub > 0.0 && percentage_gap(ub, lb).map(|g| g <= target).unwrap_or(false)
}

/// Cutting-plane loop at one node: solve, tighten, run the heuristic, purge,
/// separate, until the bound stalls, no cut is violated, or the gap closes.
pub fn cutting_plane_bound(
    p: &ProblemData,
    node_boxes: &BoxBounds,
    ub: f64,
    params: &CutParams,
    hooks: &mut dyn BoundingHooks,
    initial_pool: Vec<RltCut>,
) -> Result<BoundResult> {
    let n = p.n();
    let mut boxes = node_boxes.clone();
    let mut pool = initial_pool;
    let mut ub = ub;
    let mut trace = Vec::new();
    let mut last: Option<RelaxedSolution> = None;
    let products = if params.product_cuts {
        balancing_product_cuts(p)
    } else {
        Vec::new()
    };
    let pruned = |boxes: BoxBounds, trace: Vec<f64>, iterations, ub| BoundResult {
        lower_bound: f64::INFINITY,
        solution: None,
        iterations,
        active_cuts: Vec::new(),
        boxes,
        lb_trace: trace,
        upper_bound: ub,
    };
    let mut iterations = 0;
    while iterations < params.max_iterations {
        if boxes_infeasible(p, &boxes) {
            return Ok(pruned(boxes, trace, iterations, ub));
        }
        let mut model = build_basic_sdp(p, &boxes);
        add_product_rows(&mut model, &products);
        add_cut_rows(&mut model, &pool);
        let sol = match solve_arrow(&model)? {
            SdpOutcome::Solved(s) => s,
            SdpOutcome::Infeasible => return Ok(pruned(boxes, trace, iterations + 1, ub)),
            SdpOutcome::Failed(msg) => {
                if last.is_some() {
                    break;
                }
                return Err(S3vmError::Solver(msg));
            }
        };
        iterations += 1;
        let lb = sol.objective;
        let prev = trace.last().copied();
        trace.push(lb);
        if gap_reached(ub, lb, params.gap_target) {
            last = Some(sol);
            break;
        }
        if !hooks.tighten(&mut boxes, &sol, ub, lb) {
            return Ok(pruned(boxes, trace, iterations, ub));
        }
        let update = hooks.heuristic(&sol, ub);
        if update.upper_bound < ub {
            ub = update.upper_bound;
            if let Some(global) = &update.global_boxes {
                boxes.intersect(global);
                boxes.project_signs();
                if boxes.is_empty_box() {
                    return Ok(pruned(boxes, trace, iterations, ub));
                }
            }
        }
        if gap_reached(ub, lb, params.gap_target) {
            last = Some(sol);
            break;
        }
        pool = purge_inactive(pool, &sol, params.inactive_tol);
        if let Some(prev) = prev {
            if (lb - prev).abs() < params.stall_tol * lb.abs().max(1e-12) {
                last = Some(sol);
                break;
            }
        }
        let cuts = separate_rlt(&sol, &boxes, params.max_cuts_factor * n, params.viol_tol);
        last = Some(sol);
        if cuts.is_empty() {
            break;
        }
        pool.extend(cuts);
    }
    let sol = last.ok_or_else(|| S3vmError::Solver("no relaxation solved".into()))?;
    Ok(BoundResult {
        lower_bound: sol.objective,
        solution: Some(sol),
        iterations,
        active_cuts: pool,
        boxes,
        lb_trace: trace,
        upper_bound: ub,
    })
}
