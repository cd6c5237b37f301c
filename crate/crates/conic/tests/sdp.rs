use faer::Mat;
use proptest::prelude::*;
use s3vm_conic::{solve_sdp, Sense, SdpModel, SdpSettings, Status};

fn arrow_model(cost: &Mat<f64>, lower: &[f64], upper: &[f64]) -> SdpModel<&'static str> {
    let n = cost.nrows();
    let mut m = SdpModel::new(n + 1);
    for i in 0..n {
        for j in 0..n {
            m.set_objective(i, j, cost[(i, j)]);
        }
    }
    m.add_row(vec![(n, n, 1.0)], Sense::Eq, 1.0, "corner");
    for i in 0..n {
        m.add_row(vec![(i, i, 1.0)], Sense::Ge, 1.0, "diag");
        if lower[i].is_finite() {
            m.add_row(vec![(i, n, 1.0)], Sense::Ge, lower[i], "lo");
        }
        if upper[i].is_finite() {
            m.add_row(vec![(i, n, 1.0)], Sense::Le, upper[i], "up");
        }
    }
    m
}

#[test]
fn scalar_block_minimum() {
    let mut m = SdpModel::new(1);
    m.set_objective(0, 0, 1.0);
    m.add_row(vec![(0, 0, 1.0)], Sense::Ge, 1.0, ());
    let sol = solve_sdp(&m, &SdpSettings::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective - 1.0).abs() < 1e-6);
    assert!((sol.dual(s3vm_conic::RowId(0)) - 1.0).abs() < 1e-5);
}

#[test]
fn two_point_basic_relaxation() {
    // cost ½I with the first point labeled +1: optimum 1 with X = I.
    let cost = Mat::from_fn(2, 2, |i, j| if i == j { 0.5 } else { 0.0 });
    let m = arrow_model(&cost, &[1.0, f64::NEG_INFINITY], &[f64::INFINITY; 2]);
    let sol = solve_sdp(&m, &SdpSettings::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective - 1.0).abs() < 1e-6, "{}", sol.objective);
    let (x, xx) = sol.arrow();
    assert!((x[0] - 1.0).abs() < 1e-4);
    assert!((xx[(0, 0)] - 1.0).abs() < 1e-5 && (xx[(1, 1)] - 1.0).abs() < 1e-5);
}

#[test]
fn empty_box_is_infeasible() {
    let cost = Mat::from_fn(1, 1, |_, _| 0.5);
    let m = arrow_model(&cost, &[2.0], &[1.0]);
    let sol = solve_sdp(&m, &SdpSettings::default()).unwrap();
    assert_eq!(sol.status, Status::Infeasible);
}

#[test]
fn out_of_range_entry_rejected() {
    let mut m = SdpModel::new(2);
    m.add_row(vec![(0, 2, 1.0)], Sense::Ge, 1.0, ());
    assert!(solve_sdp(&m, &SdpSettings::default()).is_err());
}

fn random_pd(n: usize, seed: u64) -> Mat<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let a = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut c = &a * a.transpose();
    for i in 0..n {
        c[(i, i)] += 0.1;
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bound_below_rank_one_points(seed in 0u64..10_000, n in 2usize..7, signs in prop::collection::vec(prop::bool::ANY, 7)) {
        let cost = random_pd(n, seed);
        let lower = vec![-3.0; n];
        let upper = vec![3.0; n];
        let m = arrow_model(&cost, &lower, &upper);
        let sol = solve_sdp(&m, &SdpSettings::default()).unwrap();
        prop_assert_eq!(sol.status, Status::Optimal);
        // Any ±1 vector is feasible; its cost must dominate the bound.
        let x: Vec<f64> = (0..n).map(|i| if signs[i] { 1.0 } else { -1.0 }).collect();
        let mut v = 0.0;
        for i in 0..n { for j in 0..n { v += cost[(i, j)] * x[i] * x[j]; } }
        prop_assert!(sol.objective <= v + 1e-6 * (1.0 + v.abs()));
        let block = &sol.block;
        let ev = block.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        prop_assert!(ev.iter().cloned().fold(f64::INFINITY, f64::min) >= -1e-6);
        for (row, d) in m.rows().iter().zip(&sol.duals) {
            if row.sense != Sense::Eq { prop_assert!(*d >= -1e-8); }
        }
        let again = solve_sdp(&m, &SdpSettings::default()).unwrap();
        prop_assert!((again.objective - sol.objective).abs() <= 1e-7 * (1.0 + sol.objective.abs()));
    }
}
