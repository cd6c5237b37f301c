mod common;

use common::{blob_instance, brute_force, rel_diff};
use faer::Mat;
use s3vm_core::bnc::{branching_candidates, branching_scores, make_children, score_measures};
use s3vm_core::relaxations::CutParams;
use s3vm_core::{assemble_problem, check_feasible, ideal_gram, solve, BncNode, BoxBounds, SolveParams, SolveStatus};

fn exact_params() -> SolveParams {
    SolveParams {
        gap: 0.0,
        log_tightening: true,
        ..SolveParams::default()
    }
}

#[test]
fn matches_enumeration_on_small_instances() {
    for seed in 0..6u64 {
        let n = 8 + (seed as usize % 5);
        let l = 2 + (seed as usize % 3);
        let inst = blob_instance(seed, n, l, true);
        let p = &inst.problem;
        let (opt, _) = brute_force(p).expect("some labeling is feasible");
        let rep = solve(p, &exact_params()).unwrap();
        let inc = rep.incumbent.as_ref().unwrap();
        assert_eq!(rep.status, SolveStatus::OptimalWithinGap);
        assert!(check_feasible(p, &inc.point, 1e-6));
        assert!(
            rel_diff(inc.objective, opt) <= 1e-6,
            "seed {seed}: solver {} vs enumeration {opt}",
            inc.objective
        );
        assert!(rep.lower_bound <= opt * (1.0 + 1e-6));
        assert!(rep.nodes_processed <= 1 << (n - l + 1));
    }
}

#[test]
fn traces_are_monotone() {
    let inst = blob_instance(11, 12, 3, true);
    let rep = solve(&inst.problem, &exact_params()).unwrap();
    for w in rep.lb_trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-12);
    }
    for w in rep.ub_trace.windows(2) {
        assert!(w[1] <= w[0]);
    }
    for node in &rep.nodes {
        if let Some(parent) = node.parent.and_then(|id| rep.nodes.iter().find(|m| m.id == id)) {
            assert!(node.inherited_lb >= parent.inherited_lb);
        }
    }
}

#[test]
fn ideal_kernel_closes_at_root() {
    let truth = [1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0, -1.0, -1.0, 1.0];
    let gram = ideal_gram(&truth).unwrap();
    let p = assemble_problem(&gram, &truth[..3], 1.0, 0.2 * 3.0 / 9.0, false).unwrap();
    let rep = solve(&p, &SolveParams::default()).unwrap();
    assert_eq!(rep.nodes_processed, 1);
    assert_eq!(rep.incumbent.unwrap().labeling.values(), &truth);
}

#[test]
fn time_limit_reports_current_gap() {
    let inst = blob_instance(3, 14, 2, true);
    let params = SolveParams {
        gap: 0.0,
        time_limit: Some(std::time::Duration::ZERO),
        ..SolveParams::default()
    };
    let rep = solve(&inst.problem, &params).unwrap();
    assert_eq!(rep.status, SolveStatus::TimeLimit);
    assert!(rep.incumbent.is_some());
    assert!(rep.gap_percent >= 0.0);
}

#[test]
fn infeasible_balancing_is_reported() {
    // One unlabeled point cannot reach the mean 0 of mixed labels.
    let gram = Mat::<f64>::identity(3, 3);
    let p = assemble_problem(&gram, &[1.0, -1.0], 1.0, 1.0, true).unwrap();
    let rep = solve(&p, &SolveParams::default()).unwrap();
    assert_eq!(rep.status, SolveStatus::Infeasible);
    assert!(rep.incumbent.is_none());
}

#[test]
fn candidates_follow_definition() {
    let gram = Mat::<f64>::zeros(4, 4);
    let p = assemble_problem(&gram, &[1.0], 0.5, 0.5, false).unwrap();
    let boxes = BoxBounds::from_labels(&p);
    let x_star = [1.0, 1.0, 2.7, -1.0];
    let x_bar = [1.0, 0.4, 0.1, 1.2];
    assert_eq!(branching_candidates(&p, Some(&x_star), &x_bar, &boxes), vec![1]);
}

#[test]
fn box_measure_and_rank_one_scores() {
    let x = [0.5, -0.2, 0.1];
    let xx = Mat::from_fn(3, 3, |i, j| x[i] * x[j]);
    let cost = Mat::<f64>::identity(3, 3);
    let boxes = BoxBounds {
        lower: vec![-3.0, -1.0, -5.0],
        upper: vec![2.0, 1.0, 5.0],
    };
    let m = score_measures(&x, &xx, &cost, &boxes, 0);
    assert_eq!(&m[..4], &[0.0; 4]);
    assert_eq!(m[4], 3.0);
    // With zero a-measures the largest box wins.
    assert_eq!(branching_scores(&x, &xx, &cost, &boxes, &[0, 1, 2]), Some(2));
    assert_eq!(branching_scores(&x, &xx, &cost, &boxes, &[1]), Some(1));
}

#[test]
fn children_split_the_box() {
    let boxes = BoxBounds {
        lower: vec![1.0, -5.0],
        upper: vec![f64::INFINITY, 5.0],
    };
    let node = BncNode {
        boxes: boxes.clone(),
        inherited_lb: 0.5,
        depth: 0,
        id: 0,
        parent: None,
        cuts: Vec::new(),
    };
    let mut next = 0;
    let (a, b) = make_children(&node, 1, 0.7, &boxes, &[], &mut next);
    assert_eq!((a.boxes.lower[1], a.boxes.upper[1]), (1.0, 5.0));
    assert_eq!((b.boxes.lower[1], b.boxes.upper[1]), (-5.0, -1.0));
    assert!(a.boxes.within(&boxes) && b.boxes.within(&boxes));
    assert_eq!((a.inherited_lb, a.depth, a.parent), (0.7, 1, Some(0)));
    assert_ne!(a.id, b.id);
}

#[test]
fn product_cuts_keep_exactness() {
    let inst = blob_instance(5, 10, 3, true);
    let (opt, _) = brute_force(&inst.problem).unwrap();
    let params = SolveParams {
        gap: 0.0,
        cuts: CutParams {
            product_cuts: true,
            ..CutParams::default()
        },
        ..SolveParams::default()
    };
    let rep = solve(&inst.problem, &params).unwrap();
    assert!(rel_diff(rep.incumbent.unwrap().objective, opt) <= 1e-6);
}
