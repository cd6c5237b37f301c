mod common;

use common::{blob_instance, brute_force};
use faer::Mat;
use s3vm_core::relaxations::{cutting_plane_bound, CutParams, NoHooks, RelaxedSolution, RowTag, TaggedRow};
use s3vm_core::tightening::{marginal_box_update, obbt, ObbtOutcome};
use s3vm_core::{assemble_problem, BoxBounds};

fn with_rows(rows: Vec<TaggedRow>) -> RelaxedSolution {
    RelaxedSolution {
        x: vec![0.0; 2],
        xx: Mat::zeros(2, 2),
        objective: 0.0,
        rows,
        ipm_iterations: 0,
    }
}

fn active(tag: RowTag, rhs: f64, dual: f64) -> TaggedRow {
    TaggedRow {
        tag,
        rhs,
        slack: 0.0,
        dual,
    }
}

#[test]
fn obbt_on_the_level_set() {
    // Cost ½I; unbounded boxes on both points, the cutoff alone limits x₁.
    let p = assemble_problem(&Mat::zeros(2, 2), &[1.0], 0.5, 0.5, false).unwrap();
    let ObbtOutcome::Tightened(rep) = obbt(&p, &BoxBounds::unbounded(2), 1.0).unwrap() else {
        panic!("not empty")
    };
    let r = 2f64.sqrt();
    assert!((rep.boxes.upper[1] - r).abs() < 1e-4, "{:?}", rep.boxes);
    assert!((rep.boxes.lower[1] + r).abs() < 1e-4);
    assert!(rep.boxes.upper[1] >= r && rep.boxes.lower[1] <= -r);
}

#[test]
fn obbt_keeps_label_bounds_and_projects() {
    let p = assemble_problem(&Mat::zeros(2, 2), &[1.0], 0.5, 0.5, false).unwrap();
    let start = BoxBounds::from_labels(&p);
    let ObbtOutcome::Tightened(rep) = obbt(&p, &start, 1.0).unwrap() else {
        panic!("not empty")
    };
    // ½x₀² + ½x₁² <= 1 with x₀ >= 1 leaves x₁ in [-1, 1].
    assert_eq!(rep.boxes.lower[0], 1.0);
    assert!(rep.boxes.upper[1] <= 1.0 + 1e-4 && rep.boxes.lower[1] >= -1.0 - 1e-4);
    // A cutoff below the minimum empties the box.
    assert_eq!(obbt(&p, &start, 0.4).unwrap(), ObbtOutcome::Empty);
    // Forcing x₁ >= 0.3 through the box projects it to x₁ >= 1.
    let mut b = BoxBounds::from_labels(&p);
    b.lower[1] = 0.3;
    let ObbtOutcome::Tightened(rep) = obbt(&p, &b, 1.5).unwrap() else {
        panic!("not empty")
    };
    assert!(rep.boxes.lower[1] >= 1.0);
    assert!(rep.newly_sign_fixed.contains(&1));
}

#[test]
fn marginal_examples() {
    let b = BoxBounds {
        lower: vec![-3.0, -5.0],
        upper: vec![4.0, 5.0],
    };
    // UB - LB = 4 with λ = 2: U ≤ L + 2 = -1.
    let rep = marginal_box_update(&b, &with_rows(vec![active(RowTag::BoxLower(0), -3.0, 2.0)]), 4.0, 0.0);
    assert!(rep.boxes.upper[0] <= -1.0 + 1e-5);
    assert_eq!(rep.boxes.fixed_sign(0), Some(-1.0));
    let rep = marginal_box_update(&b, &with_rows(vec![active(RowTag::DiagLower(1), 1.0, 1.0)]), 3.0, 0.0);
    assert!((rep.boxes.upper[1] - 2.0).abs() < 1e-5 && (rep.boxes.lower[1] + 2.0).abs() < 1e-5);
    // Zero budget collapses onto the active value (up to the numerical margin).
    let rep = marginal_box_update(&b, &with_rows(vec![active(RowTag::BoxUpper(1), 5.0, 1.0)]), 2.0, 2.0);
    assert!((rep.boxes.lower[1] - 5.0).abs() < 1e-5);
    // Inactive rows or tiny duals do nothing.
    let mut row = active(RowTag::BoxLower(0), -3.0, 2.0);
    row.slack = 0.5;
    assert_eq!(marginal_box_update(&b, &with_rows(vec![row]), 4.0, 0.0).boxes, b);
    let tiny = active(RowTag::BoxLower(0), -3.0, 1e-9);
    assert_eq!(marginal_box_update(&b, &with_rows(vec![tiny]), 4.0, 0.0).boxes, b);
}

#[test]
fn diag_upper_needs_p_at_least_one() {
    let b = BoxBounds {
        lower: vec![-3.0, -3.0],
        upper: vec![3.0, 3.0],
    };
    // p = 9 - 10 < 1: no change.
    let rep = marginal_box_update(&b, &with_rows(vec![active(RowTag::DiagUpper(0), 9.0, 1.0)]), 10.0, 0.0);
    assert_eq!(rep.boxes, b);
    // p = 9 - 5 = 4: |x| >= 2, only the interval where the box touches both sides stays.
    let one_sided = BoxBounds {
        lower: vec![-1.5, -3.0],
        upper: vec![3.0, 3.0],
    };
    let rep = marginal_box_update(&one_sided, &with_rows(vec![active(RowTag::DiagUpper(0), 9.0, 1.0)]), 5.0, 0.0);
    assert!(rep.boxes.lower[0] >= 2.0 - 1e-5);
}

#[test]
fn optimum_survives_tightening() {
    for seed in 0..4u64 {
        let inst = blob_instance(200 + seed, 10, 3, true);
        let p = &inst.problem;
        let (opt, x_opt) = brute_force(p).unwrap();
        let ObbtOutcome::Tightened(rep) = obbt(p, &BoxBounds::from_labels(p), opt).unwrap() else {
            panic!("seed {seed}: obbt removed the optimum")
        };
        assert!(rep.boxes.contains(&x_opt, 1e-7), "seed {seed}");
        assert!(rep.boxes.within(&BoxBounds::from_labels(p)));
        let res = cutting_plane_bound(p, &rep.boxes, opt, &CutParams::default(), &mut NoHooks, Vec::new()).unwrap();
        if let Some(sol) = &res.solution {
            let m = marginal_box_update(&rep.boxes, sol, opt, sol.objective);
            assert!(m.boxes.contains(&x_opt, 1e-7), "seed {seed}: marginals cut the optimum");
            assert!(m.boxes.within(&rep.boxes));
        }
    }
}

#[test]
fn projected_obbt_matches_full_qcqp() {
    for (seed, balancing) in [(3u64, true), (4, false), (5, true)] {
        let inst = blob_instance(seed, 30, 4, balancing);
        let p = &inst.problem;
        let ub = s3vm_core::heuristic::initial_incumbent(p).unwrap().objective;
        let labels = BoxBounds::from_labels(p);
        // Huge finite boxes make every variable bounded, which rules out the projection.
        let mut wide = labels.clone();
        for i in 0..p.n() {
            wide.lower[i] = wide.lower[i].max(-1e4);
            wide.upper[i] = wide.upper[i].min(1e4);
        }
        let (ObbtOutcome::Tightened(a), ObbtOutcome::Tightened(b)) =
            (obbt(p, &labels, ub).unwrap(), obbt(p, &wide, ub).unwrap())
        else {
            panic!("incumbent level set is not empty")
        };
        for i in 0..p.n() {
            for (x, y) in [(a.boxes.lower[i], b.boxes.lower[i]), (a.boxes.upper[i], b.boxes.upper[i])] {
                assert!((x - y).abs() <= 1e-4 * (1.0 + y.abs()), "seed {seed} i {i}: {x} vs {y}");
            }
        }
    }
}
