//! Best-first branch-and-cut over the signs of the unlabeled points.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use faer::Mat;

use crate::heuristic::{improve_from_point, initial_incumbent, label_qp, label_qp_repaired, round_sdp};
use crate::problem::{check_feasible, percentage_gap, BoxBounds, Incumbent, Labeling, ProblemData, FEAS_TOL};
use crate::relaxations::{
    cutting_plane_bound, BoundingHooks, CutParams, HeuristicUpdate, RelaxedSolution, RltCut,
};
use crate::tightening::{marginal_box_update, obbt, ObbtOutcome};
use crate::Result;

const ACTIVE_TOL: f64 = 1e-6;
const DECIDED_TOL: f64 = 1e-9;
const RANK_ONE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BncNode {
    pub boxes: BoxBounds,
    pub inherited_lb: f64,
    pub depth: usize,
    pub id: usize,
    pub parent: Option<usize>,
    /// Cuts inherited from the parent; their coefficients stay valid under
    /// box shrinkage.
    pub cuts: Vec<RltCut>,
}

#[derive(Debug, Clone)]
pub struct SolveParams {
    /// Target percentage gap.
    pub gap: f64,
    pub time_limit: Option<Duration>,
    /// Stop after this many processed nodes; `Some(1)` gives the root bound.
    pub node_limit: Option<usize>,
    pub cuts: CutParams,
    /// Run OBBT at the root and after each incumbent improvement.
    pub obbt: bool,
    /// Apply marginals-based tightening at every cutting-plane iteration.
    pub marginals: bool,
    /// Starting labeling; the supervised SVM labeling when `None`.
    pub initial_labeling: Option<Labeling>,
    /// Keep every (before, after) pair of box updates in the report.
    pub log_tightening: bool,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            gap: 0.1,
            time_limit: None,
            node_limit: None,
            cuts: CutParams::default(),
            obbt: true,
            marginals: true,
            initial_labeling: None,
            log_tightening: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    OptimalWithinGap,
    TimeLimit,
    NodeLimit,
    Infeasible,
}

/// Per-node log entry.
#[derive(Debug, Clone)]
pub struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub inherited_lb: f64,
    /// Bound computed at the node (`+∞` when pruned by infeasibility).
    pub lower_bound: f64,
    pub boxes: BoxBounds,
    pub leaf: bool,
    pub branched_on: Option<usize>,
    /// SDP solves in the cutting-plane loop.
    pub cut_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub incumbent: Option<Incumbent>,
    pub lower_bound: f64,
    pub gap_percent: f64,
    pub nodes_processed: usize,
    pub wall_time: Duration,
    pub status: SolveStatus,
    pub root_lower_bound: f64,
    pub root_boxes: BoxBounds,
    /// Global lower bound after each node.
    pub lb_trace: Vec<f64>,
    /// Upper bound after each node.
    pub ub_trace: Vec<f64>,
    pub nodes: Vec<NodeRecord>,
    /// Box updates from OBBT and marginals, when requested. An empty outcome
    /// is logged as a box with `lower = +∞`.
    pub tightening_log: Vec<(BoxBounds, BoxBounds)>,
}

impl SolveReport {
    pub fn upper_bound(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective)
    }
}

/// Unlabeled, unfixed indices whose labeling-QP constraint is active and whose
/// relaxation value is still undecided.
pub fn branching_candidates(p: &ProblemData, x_star: Option<&[f64]>, x_bar: &[f64], boxes: &BoxBounds) -> Vec<usize> {
    (p.l()..p.n())
        .filter(|&i| !boxes.is_sign_fixed(i))
        .filter(|&i| x_star.is_none_or(|xs| xs[i].abs() <= 1.0 + ACTIVE_TOL))
        .filter(|&i| x_bar[i].abs() < 1.0 - DECIDED_TOL)
        .collect()
}

/// Score measures `[a¹, a², a³, a⁴, b]` for index `i`.
pub fn score_measures(x_bar: &[f64], xx: &Mat<f64>, cost: &Mat<f64>, boxes: &BoxBounds, i: usize) -> [f64; 5] {
    let mut a = [0.0; 4];
    for (j, &xj) in x_bar.iter().enumerate() {
        let e = x_bar[i] * xj - xx[(i, j)];
        let ce = cost[(i, j)] * e;
        a[0] += e;
        a[1] += e.abs();
        a[2] += ce;
        a[3] += ce.abs();
    }
    let b = (1.0 - boxes.lower[i]).min(1.0 + boxes.upper[i]);
    [a[0], a[1], a[2], a[3], b]
}

/// Candidate with the smallest rank sum, ranking each measure in decreasing
/// order (competition ranking); ties go to the smallest index.
pub fn branching_scores(x_bar: &[f64], xx: &Mat<f64>, cost: &Mat<f64>, boxes: &BoxBounds, cands: &[usize]) -> Option<usize> {
    if cands.len() <= 1 {
        return cands.first().copied();
    }
    let measures: Vec<[f64; 5]> = cands
        .iter()
        .map(|&i| score_measures(x_bar, xx, cost, boxes, i))
        .collect();
    let mut best: Option<(usize, usize)> = None;
    for (k, &i) in cands.iter().enumerate() {
        let rank_sum: usize = (0..5)
            .map(|m| 1 + measures.iter().filter(|o| o[m] > measures[k][m]).count())
            .sum();
        if best.is_none_or(|(s, j)| rank_sum < s || (rank_sum == s && i < j)) {
            best = Some((rank_sum, i));
        }
    }
    best.map(|(_, i)| i)
}

/// Children with `L_i = 1` and `U_i = -1`.
pub fn make_children(node: &BncNode, i: usize, lb: f64, boxes: &BoxBounds, cuts: &[RltCut], next_id: &mut usize) -> (BncNode, BncNode) {
    let mut child = |set_lower: bool| {
        let mut b = boxes.clone();
        if set_lower {
            b.lower[i] = b.lower[i].max(1.0);
        } else {
            b.upper[i] = b.upper[i].min(-1.0);
        }
        *next_id += 1;
        BncNode {
            boxes: b,
            inherited_lb: lb,
            depth: node.depth + 1,
            id: *next_id,
            parent: Some(node.id),
            cuts: cuts.to_vec(),
        }
    };
    let pos = child(true);
    let neg = child(false);
    (pos, neg)
}

struct Queued(BncNode, usize);

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    // BinaryHeap is a max-heap: smaller bound, then earlier insertion, wins.
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.inherited_lb
            .total_cmp(&self.0.inherited_lb)
            .then(o.1.cmp(&self.1))
    }
}

/// State shared between the tree and the per-iteration hooks.
struct Shared<'a> {
    p: &'a ProblemData,
    params: &'a SolveParams,
    incumbent: Option<Incumbent>,
    global_boxes: BoxBounds,
    /// Set when OBBT shows no point beats the incumbent.
    root_closed: bool,
    log: Option<Vec<(BoxBounds, BoxBounds)>>,
}

impl Shared<'_> {
    fn ub(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective)
    }

    /// Returns true if `cand` replaced the incumbent.
    fn offer(&mut self, cand: Incumbent) -> bool {
        if !check_feasible(self.p, &cand.point, FEAS_TOL) || !(cand.objective < self.ub()) {
            return false;
        }
        self.incumbent = Some(cand);
        if self.params.obbt {
            self.run_obbt();
        }
        true
    }

    fn run_obbt(&mut self) {
        let ub = self.ub();
        if !ub.is_finite() {
            return;
        }
        let before = self.global_boxes.clone();
        // Root scope: only the label fixings enter the subproblems.
        match obbt(self.p, &BoxBounds::from_labels(self.p), ub) {
            Ok(ObbtOutcome::Tightened(rep)) => {
                self.global_boxes.intersect(&rep.boxes);
                self.global_boxes.project_signs();
                if self.global_boxes.is_empty_box() {
                    self.root_closed = true;
                }
            }
            Ok(ObbtOutcome::Empty) => self.root_closed = true,
            Err(_) => {}
        }
        if let Some(log) = &mut self.log {
            let mut after = self.global_boxes.clone();
            if self.root_closed {
                after.lower.iter_mut().for_each(|v| *v = f64::INFINITY);
            }
            log.push((before, after));
        }
    }
}

impl BoundingHooks for Shared<'_> {
    fn tighten(&mut self, boxes: &mut BoxBounds, sol: &RelaxedSolution, ub: f64, lb: f64) -> bool {
        if !self.params.marginals || !ub.is_finite() {
            return true;
        }
        let rep = marginal_box_update(boxes, sol, ub, lb);
        if let Some(log) = &mut self.log {
            log.push((boxes.clone(), rep.boxes.clone()));
        }
        *boxes = rep.boxes;
        !boxes.is_empty_box()
    }

    fn heuristic(&mut self, sol: &RelaxedSolution, ub: f64) -> HeuristicUpdate {
        let improved = match improve_from_point(self.p, &sol.x) {
            Ok(inc) => self.offer(inc),
            Err(_) => false,
        };
        let current = self.ub().min(ub);
        if improved && self.root_closed {
            // Nothing beats the new incumbent anywhere.
            let mut empty = self.global_boxes.clone();
            empty.lower[0] = f64::INFINITY;
            return HeuristicUpdate {
                upper_bound: current,
                global_boxes: Some(empty),
            };
        }
        HeuristicUpdate {
            upper_bound: current,
            global_boxes: improved.then(|| self.global_boxes.clone()),
        }
    }
}

fn gap_closed(ub: f64, lb: f64, target: f64) -> bool {
    if lb >= ub {
        return true;
    }
    ub.is_finite() && ub > 0.0 && percentage_gap(ub, lb).map(|g| g <= target).unwrap_or(false)
}

fn is_rank_one(x: &[f64], xx: &Mat<f64>) -> bool {
    let scale = x.iter().fold(1.0f64, |m, v| m.max(v * v));
    (0..x.len()).all(|i| (0..x.len()).all(|j| (xx[(i, j)] - x[i] * x[j]).abs() <= RANK_ONE_TOL * scale))
}

fn all_fixed(p: &ProblemData, boxes: &BoxBounds) -> bool {
    (p.l()..p.n()).all(|i| boxes.is_sign_fixed(i))
}

fn leaf_labeling(p: &ProblemData, boxes: &BoxBounds) -> Labeling {
    let mut v = p.labels().to_vec();
    v.extend((p.l()..p.n()).map(|i| boxes.fixed_sign(i).expect("leaf is sign-fixed")));
    Labeling::new(v, p.l()).expect("±1 entries")
}

/// Exact (within `params.gap`) minimization of the labeling problem.
pub fn solve(p: &ProblemData, params: &SolveParams) -> Result<SolveReport> {
    let start = Instant::now();
    let timed_out = || params.time_limit.is_some_and(|t| start.elapsed() >= t);
    let root_boxes = BoxBounds::from_labels(p);
    let mut sh = Shared {
        p,
        params,
        incumbent: None,
        global_boxes: root_boxes.clone(),
        root_closed: false,
        log: params.log_tightening.then(Vec::new),
    };
    let first = match &params.initial_labeling {
        Some(lab) => label_qp_repaired(p, lab, lab.values())
            .and_then(|inc| crate::heuristic::two_opt_search(p, &inc)),
        None => initial_incumbent(p),
    };
    if let Ok(inc) = first {
        if check_feasible(p, &inc.point, FEAS_TOL) {
            sh.incumbent = Some(inc);
        }
    }
    if params.obbt {
        sh.run_obbt();
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut next_id = 0usize;
    heap.push(Queued(
        BncNode {
            boxes: sh.global_boxes.clone(),
            inherited_lb: f64::NEG_INFINITY,
            depth: 0,
            id: 0,
            parent: None,
            cuts: Vec::new(),
        },
        seq,
    ));
    // Smallest bound among nodes closed by the gap rule rather than by bound.
    let mut gap_pruned = f64::INFINITY;
    let mut nodes = Vec::new();
    let mut lb_trace = Vec::new();
    let mut ub_trace = Vec::new();
    let mut global_lb = f64::NEG_INFINITY;
    let mut root_lb = f64::NEG_INFINITY;
    let mut status = SolveStatus::OptimalWithinGap;

    while let Some(Queued(node, _)) = heap.pop() {
        if sh.root_closed {
            heap.clear();
            break;
        }
        if timed_out() || params.node_limit.is_some_and(|m| nodes.len() >= m) {
            status = if timed_out() {
                SolveStatus::TimeLimit
            } else {
                SolveStatus::NodeLimit
            };
            heap.push(Queued(node, 0));
            break;
        }
        let mut boxes = node.boxes.clone();
        boxes.intersect(&sh.global_boxes);
        boxes.project_signs();
        let mut record = NodeRecord {
            id: node.id,
            parent: node.parent,
            depth: node.depth,
            inherited_lb: node.inherited_lb,
            lower_bound: f64::INFINITY,
            boxes: boxes.clone(),
            leaf: false,
            branched_on: None,
            cut_iterations: 0,
        };
        if gap_closed(sh.ub(), node.inherited_lb, params.gap) {
            record.lower_bound = node.inherited_lb;
            if node.inherited_lb < sh.ub() {
                gap_pruned = gap_pruned.min(node.inherited_lb);
            }
        } else if boxes.is_empty_box() {
        } else if all_fixed(p, &boxes) {
            record.leaf = true;
            let lab = leaf_labeling(p, &boxes);
            if let Ok(inc) = label_qp(p, &lab) {
                record.lower_bound = inc.objective;
                sh.offer(inc);
            }
        } else {
            let ub = sh.ub();
            match cutting_plane_bound(p, &boxes, ub, &params.cuts, &mut sh, node.cuts.clone()) {
                Ok(res) => {
                    let lb = res.lower_bound.max(node.inherited_lb);
                    record.lower_bound = lb;
                    record.boxes = res.boxes.clone();
                    record.cut_iterations = res.iterations;
                    if node.depth == 0 {
                        root_lb = lb;
                    }
                    let ub = sh.ub();
                    if lb.is_finite() && gap_closed(ub, lb, params.gap) {
                        if lb < ub {
                            gap_pruned = gap_pruned.min(lb);
                        }
                    } else if lb.is_finite() {
                        let sol = res.solution.as_ref().expect("finite bound has a solution");
                        if let Some(i) = choose_branch(p, sol, &res.boxes, &mut sh) {
                            record.branched_on = Some(i);
                            let (a, b) = make_children(&node, i, lb, &res.boxes, &res.active_cuts, &mut next_id);
                            for c in [a, b] {
                                seq += 1;
                                heap.push(Queued(c, seq));
                            }
                        } else {
                            // Rank-one feasible relaxation: its point is optimal here.
                            if lb < sh.ub() {
                                gap_pruned = gap_pruned.min(lb);
                            }
                        }
                    }
                }
                Err(_) => {
                    // No bound available: split on the first free index.
                    let i = (p.l()..p.n())
                        .find(|&i| !boxes.is_sign_fixed(i))
                        .expect("non-leaf has a free index");
                    record.lower_bound = node.inherited_lb;
                    record.branched_on = Some(i);
                    let (a, b) = make_children(&node, i, node.inherited_lb, &boxes, &[], &mut next_id);
                    for c in [a, b] {
                        seq += 1;
                        heap.push(Queued(c, seq));
                    }
                }
            }
        }
        nodes.push(record);
        let open_min = heap
            .iter()
            .map(|q| q.0.inherited_lb)
            .fold(f64::INFINITY, f64::min);
        let current = open_min.min(gap_pruned).min(sh.ub());
        global_lb = global_lb.max(current);
        lb_trace.push(global_lb);
        ub_trace.push(sh.ub());
    }

    let ub = sh.ub();
    if heap.is_empty() || sh.root_closed {
        global_lb = global_lb.max(gap_pruned.min(ub));
    }
    if sh.incumbent.is_none() && status == SolveStatus::OptimalWithinGap {
        status = SolveStatus::Infeasible;
    }
    let gap_percent = if ub.is_finite() && ub > 0.0 {
        percentage_gap(ub, global_lb)?
    } else if ub.is_finite() {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(SolveReport {
        incumbent: sh.incumbent,
        lower_bound: global_lb,
        gap_percent,
        nodes_processed: nodes.len(),
        wall_time: start.elapsed(),
        status,
        root_lower_bound: root_lb,
        root_boxes: sh.global_boxes,
        lb_trace,
        ub_trace,
        nodes,
        tightening_log: sh.log.unwrap_or_default(),
    })
}

/// Branching index, or `None` when the node is solved by its relaxation.
fn choose_branch(p: &ProblemData, sol: &RelaxedSolution, boxes: &BoxBounds, sh: &mut Shared<'_>) -> Option<usize> {
    let lab = round_sdp(&sol.x, p.labels());
    let x_star = label_qp_repaired(p, &lab, &sol.x).ok().map(|inc| {
        let pt = inc.point.clone();
        sh.offer(inc);
        pt
    });
    let cands = branching_candidates(p, x_star.as_deref(), &sol.x, boxes);
    if let Some(i) = branching_scores(&sol.x, &sol.xx, p.cost(), boxes, &cands) {
        return Some(i);
    }
    if is_rank_one(&sol.x, &sol.xx) && check_feasible(p, &sol.x, FEAS_TOL) && boxes.contains(&sol.x, FEAS_TOL) {
        if let Ok(inc) = Incumbent::from_point(p, sol.x.clone()) {
            sh.offer(inc);
        }
        return None;
    }
    (p.l()..p.n())
        .filter(|&i| !boxes.is_sign_fixed(i))
        .min_by(|&a, &b| sol.x[a].abs().total_cmp(&sol.x[b].abs()).then(a.cmp(&b)))
}
