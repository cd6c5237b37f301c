use std::io::Write;
use std::path::PathBuf;

use faer::Mat;
use proptest::prelude::*;
use s3vm_cli::baseline::{baseline_svm, fit_predict};
use s3vm_cli::bench::{unlabeled_penalty, ClChoice, DataSource, KernelChoice};
use s3vm_cli::cv::{cross_validate, default_cl_grid};
use s3vm_cli::synth::{gaussian_blobs, two_moons};
use s3vm_cli::{accuracy, load_csv, mask_labels, run_benchmark, standardize, Dataset, HarnessError, RunConfig};
use s3vm_core::{percentage_gap, KernelSpec};

fn temp_csv(name: &str, body: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("s3vm-{}-{name}.csv", std::process::id()));
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(body.as_bytes()).unwrap();
    path
}

#[test]
fn csv_with_unknown_label() {
    let path = temp_csv("three", "0.5,1.0,+1\n2.0,0.1,?\n-1.0,3.0,-1\n");
    let d = load_csv(&path, None).unwrap();
    assert_eq!(d.len(), 3);
    assert_eq!(d.dim(), 2);
    assert_eq!(d.labeled_indices(), vec![0, 2]);
    assert_eq!(d.labels, vec![Some(1.0), None, Some(-1.0)]);
}

#[test]
fn csv_header_and_label_column() {
    let path = temp_csv("header", "label,a,b\n1,0.5,1\n-1,2,3\n,4,5\n");
    let d = load_csv(&path, Some(0)).unwrap();
    assert_eq!(d.len(), 3);
    assert_eq!(d.features[(1, 1)], 3.0);
    assert_eq!(d.labeled_indices(), vec![0, 1]);
}

#[test]
fn csv_fully_labeled() {
    let path = temp_csv("full", "1,2,+1\n3,4,-1\n");
    let d = load_csv(&path, None).unwrap();
    assert_eq!(d.labeled_indices().len(), 2);
    assert_eq!(d.truth(), Some(vec![1.0, -1.0]));
}

#[test]
fn csv_errors() {
    let empty = temp_csv("empty", "");
    assert!(matches!(load_csv(&empty, None), Err(HarnessError::Empty)));
    let arity = temp_csv("arity", "1,2,+1\n3,-1\n");
    assert!(matches!(load_csv(&arity, None), Err(HarnessError::Parse { line: 2, .. })));
    let nan = temp_csv("nan", "1,2,+1\n3,NaN,-1\n");
    assert!(load_csv(&nan, None).is_err());
    let bad_label = temp_csv("label", "1,2,+1\n3,4,7\n");
    assert!(load_csv(&bad_label, None).is_err());
}

#[test]
fn standardize_examples() {
    let m = Mat::from_fn(2, 1, |i, _| if i == 0 { 1.0 } else { 3.0 });
    let s = standardize(&m);
    assert!((s[(0, 0)] + 0.5f64.sqrt()).abs() < 1e-12);
    assert!((s[(1, 0)] - 0.5f64.sqrt()).abs() < 1e-12);

    let c = Mat::from_fn(4, 2, |i, j| if j == 0 { 5.0 } else { i as f64 });
    let s = standardize(&c);
    assert!((0..4).all(|i| s[(i, 0)] == 0.0));
}

#[test]
fn standardize_moments_and_idempotence() {
    let d = gaussian_blobs(40, 3.0, 9);
    let scaled = Mat::from_fn(40, 2, |i, j| 4.0 * d.features[(i, j)] + 7.0);
    let once = standardize(&scaled);
    for j in 0..once.ncols() {
        let col = once.col_as_slice(j);
        let mean = col.iter().sum::<f64>() / 40.0;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 39.0;
        assert!(mean.abs() < 1e-10);
        assert!((var.sqrt() - 1.0).abs() < 1e-10);
    }
    let twice = standardize(&once);
    for i in 0..40 {
        for j in 0..2 {
            assert!((once[(i, j)] - twice[(i, j)]).abs() < 1e-9);
        }
    }
}

#[test]
fn masking_is_stratified_and_deterministic() {
    let d = gaussian_blobs(100, 3.0, 1);
    let m = mask_labels(&d, 0.1, 5).unwrap();
    let truth = d.truth().unwrap();
    for class in [1.0, -1.0] {
        let count = m.labeled_indices().iter().filter(|&&i| truth[i] == class).count();
        assert_eq!(count, 5);
    }
    assert_eq!(m.labeled_mask, mask_labels(&d, 0.1, 5).unwrap().labeled_mask);
    assert_ne!(m.labeled_mask, mask_labels(&d, 0.1, 6).unwrap().labeled_mask);
    assert_eq!(mask_labels(&d, 0.2, 5).unwrap().labeled_indices().len(), 20);
}

#[test]
fn masking_rejects_empty_class() {
    let d = gaussian_blobs(10, 3.0, 1);
    assert!(matches!(mask_labels(&d, 0.05, 1), Err(HarnessError::EmptyClass { .. })));
    assert!(mask_labels(&d, 1.0, 1).is_err());
}

#[test]
fn accuracy_examples() {
    let truth = [1.0, -1.0, 1.0, -1.0];
    let mask = [true, false, false, false];
    assert_eq!(accuracy(&[1.0, -1.0, 1.0, -1.0], &truth, &mask), Some(100.0));
    let half = accuracy(&[1.0, -1.0, -1.0, 1.0], &truth, &[true, true, false, false]);
    assert_eq!(half, Some(0.0));
    assert_eq!(accuracy(&[1.0, 1.0, 1.0, -1.0], &truth, &[true, false, true, false]), Some(50.0));
    assert_eq!(accuracy(&truth, &truth, &[true; 4]), None);
}

#[test]
fn baseline_coincident_point() {
    let train = Mat::from_fn(2, 2, |i, j| if i == 1 && j == 0 { 3.0 } else { 0.0 });
    let test = Mat::zeros(1, 2);
    let pred = fit_predict(&train, &[1.0, -1.0], &test, &KernelSpec::Rbf { gamma: 0.5 }, 1.0).unwrap();
    assert_eq!(pred, vec![1.0]);
}

#[test]
fn baseline_separable_linear() {
    // Two tight clusters mirrored through the origin.
    let n = 20;
    let features = Mat::from_fn(n, 2, |i, j| {
        let side = if i % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 {
            side * (3.0 + 0.1 * (i / 2) as f64)
        } else {
            0.2 * ((i * 7) % 5) as f64 - 0.4
        }
    });
    let labels = (0..n).map(|i| Some(if i % 2 == 0 { 1.0 } else { -1.0 })).collect();
    let mut d = Dataset::new("sep", features, labels);
    d.labeled_mask = (0..n).map(|i| i < 4).collect();
    let res = baseline_svm(&d, &KernelSpec::Linear, 1.0).unwrap();
    assert_eq!(res.accuracy, Some(100.0));
}

fn rings(n: usize) -> Dataset {
    let features = Mat::from_fn(n, 2, |i, j| {
        let r = if i % 2 == 0 { 1.0 } else { 3.0 };
        let t = 2.0 * std::f64::consts::PI * (i / 2) as f64 / (n / 2) as f64;
        r * if j == 0 { t.cos() } else { t.sin() }
    });
    Dataset::new("rings", features, (0..n).map(|i| Some(if i % 2 == 0 { 1.0 } else { -1.0 })).collect())
}

#[test]
fn cv_singleton_grid() {
    let d = mask_labels(&gaussian_blobs(60, 3.0, 2), 0.3, 2).unwrap();
    let res = cross_validate(&d, &[1.0], &[KernelSpec::Linear], 3, 0).unwrap();
    assert_eq!(res.c_l, 1.0);
    assert_eq!(res.kernel, KernelSpec::Linear);
}

#[test]
fn cv_picks_rbf_on_rings() {
    let d = rings(40);
    let res = cross_validate(&d, &default_cl_grid(), &[KernelSpec::Linear, KernelSpec::Rbf { gamma: 0.5 }], 10, 0).unwrap();
    assert!(matches!(res.kernel, KernelSpec::Rbf { .. }));
    assert!(res.score > 90.0);
}

#[test]
fn cv_grid_and_default_folds() {
    let grid = default_cl_grid();
    assert_eq!(grid.len(), 21);
    assert!((grid[0] - 0.1).abs() < 1e-12 && (grid[20] - 10.0).abs() < 1e-12);
    assert!((grid[1] - 0.125_892_541).abs() < 1e-8);
    assert_eq!(RunConfig::default().cv_folds, 10);
}

#[test]
fn cv_too_few_labels() {
    let d = mask_labels(&gaussian_blobs(20, 3.0, 2), 0.1, 2).unwrap();
    assert!(cross_validate(&d, &[1.0], &[KernelSpec::Linear], 10, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cv_folds_only_hold_labeled_rows(seed in 0u64..1000, frac in 0.15f64..0.5) {
        let d = mask_labels(&two_moons(60, 0.1, seed), frac, seed).unwrap();
        let labeled = d.labeled_indices();
        let k = labeled.len().min(4);
        let res = cross_validate(&d, &[0.5, 2.0], &[KernelSpec::Linear], k, seed).unwrap();
        let mut seen: Vec<usize> = res.folds.concat();
        seen.sort_unstable();
        prop_assert_eq!(seen, labeled);
    }
}

#[test]
fn unlabeled_penalty_formula() {
    assert!((unlabeled_penalty(0.2, 10, 100, 1.0) - 0.2 / 9.0).abs() < 1e-15);
    assert!((unlabeled_penalty(0.2, 10, 100, 1.0) - 0.0222).abs() < 1e-4);
}

fn small_config(seed: u64) -> RunConfig {
    RunConfig {
        data: DataSource::Synthetic {
            name: "blobs".into(),
            n: 30,
        },
        labeled_fraction: Some(0.2),
        seed,
        ..RunConfig::default()
    }
}

#[test]
fn report_is_consistent() {
    let r = run_benchmark(&small_config(3));
    assert!(r.error.is_none(), "{:?}", r.error);
    assert_eq!((r.n, r.l), (30, 6));
    let (lb, ub) = (r.lb.unwrap(), r.ub.unwrap());
    assert_eq!(r.gap_percent, Some(percentage_gap(ub, lb).unwrap()));
    assert!(r.gap_percent.unwrap() <= 0.1);
    assert_eq!(r.labeling.len(), 30);
    assert!((r.cu - unlabeled_penalty(0.2, 6, 30, 1.0)).abs() < 1e-15);
    assert!(r.accuracy_percent.is_some() && r.baseline_accuracy_percent.is_some());
    let json = serde_json::to_value(&r).unwrap();
    for key in ["instance", "n", "l", "kernel", "cl", "cu", "lb", "ub", "gap_percent", "nodes", "wall_time_sec", "status", "labeling"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn report_is_deterministic() {
    let a = run_benchmark(&small_config(4));
    let b = run_benchmark(&small_config(4));
    assert_eq!(a.labeling, b.labeling);
    assert_eq!(a.lb, b.lb);
    assert_eq!(a.ub, b.ub);
    assert_eq!(a.nodes, b.nodes);
}

#[test]
fn stage_errors_are_reported() {
    let cfg = RunConfig {
        data: DataSource::Synthetic {
            name: "nope".into(),
            n: 10,
        },
        ..RunConfig::default()
    };
    let r = run_benchmark(&cfg);
    assert_eq!(r.error.as_ref().map(|e| e.stage), Some("load"));

    let cfg = RunConfig {
        labeled_fraction: Some(1.5),
        ..small_config(1)
    };
    assert_eq!(run_benchmark(&cfg).error.map(|e| e.stage), Some("config"));
}

#[test]
fn cv_choices_flow_into_the_report() {
    let cfg = RunConfig {
        kernel: KernelChoice::Cv,
        cl: ClChoice::Cv,
        cv_folds: 2,
        ..small_config(2)
    };
    let r = run_benchmark(&cfg);
    assert!(r.error.is_none(), "{:?}", r.error);
    assert!(default_cl_grid().iter().any(|&c| c == r.cl));
    assert!(r.kernel == "linear" || r.kernel == "rbf");
}

#[test]
fn data_source_parsing() {
    assert_eq!(
        DataSource::parse("synthetic:two_moons:300", None).unwrap(),
        DataSource::Synthetic {
            name: "two_moons".into(),
            n: 300
        }
    );
    assert!(matches!(DataSource::parse("synthetic:blobs", None).unwrap(), DataSource::Synthetic { n: 100, .. }));
    assert!(DataSource::parse("synthetic:blobs:x", None).is_err());
    assert!(matches!(DataSource::parse("a.csv", Some(0)).unwrap(), DataSource::Csv { .. }));
}
