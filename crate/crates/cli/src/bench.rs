//! The benchmark pipeline: load, standardize, mask, cross-validate, solve and
//! report.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::Serialize;
use s3vm_core::bnc::SolveParams;
use s3vm_core::relaxations::{basic_sdp_bound, qp_bound, qp_lagrangian_bound, CutParams};
use s3vm_core::{assemble_problem, check_feasible, default_gamma, gram_matrix, percentage_gap, solve, KernelSpec, ProblemData, SolveStatus};

use crate::baseline::baseline_svm;
use crate::cv::{cross_validate, default_cl_grid};
use crate::dataset::{accuracy, load_csv, mask_labels, standardize, Dataset};
use crate::error::{HarnessError, Result};
use crate::synth;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DataSource {
    Csv { path: PathBuf, label_column: Option<usize> },
    Synthetic { name: String, n: usize },
}

impl DataSource {
    /// `synthetic:<name>[:<n>]` or a file path.
    pub fn parse(s: &str, label_column: Option<usize>) -> Result<Self> {
        match s.strip_prefix("synthetic:") {
            Some(rest) => {
                let mut parts = rest.splitn(2, ':');
                let name = parts.next().unwrap_or_default().to_string();
                let n = match parts.next() {
                    Some(v) => v
                        .parse()
                        .map_err(|_| HarnessError::Config(format!("bad synthetic size {v:?}")))?,
                    None => 100,
                };
                Ok(Self::Synthetic { name, n })
            }
            None => Ok(Self::Csv {
                path: PathBuf::from(s),
                label_column,
            }),
        }
    }

    pub fn load(&self, seed: u64) -> Result<Dataset> {
        match self {
            Self::Csv { path, label_column } => load_csv(path, *label_column),
            Self::Synthetic { name, n } => synth::by_name(name, *n, seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum KernelChoice {
    Linear,
    Rbf,
    Cv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ClChoice {
    Value(f64),
    Cv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    Solve,
    Bounds,
    Sweep,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub data: DataSource,
    /// Fraction of labels kept per class; `None` keeps the mask of the source.
    pub labeled_fraction: Option<f64>,
    pub seed: u64,
    pub kernel: KernelChoice,
    /// RBF width; `None` means `1/d`.
    pub gamma: Option<f64>,
    pub cl: ClChoice,
    pub cu_factor: f64,
    pub balancing: bool,
    /// Target percentage gap.
    pub gap_tol: f64,
    pub time_limit_sec: Option<f64>,
    pub cv_folds: usize,
    pub max_cuts_factor: usize,
    pub viol_tol: f64,
    pub inactive_tol: f64,
    pub stall_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Synthetic {
                name: "blobs".into(),
                n: 100,
            },
            labeled_fraction: None,
            seed: 0,
            kernel: KernelChoice::Rbf,
            gamma: None,
            cl: ClChoice::Value(1.0),
            cu_factor: 0.2,
            balancing: true,
            gap_tol: 0.1,
            time_limit_sec: None,
            cv_folds: 10,
            max_cuts_factor: 5,
            viol_tol: 1e-2,
            inactive_tol: 1e-4,
            stall_tol: 1e-3,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cu-factor", self.cu_factor),
            ("gap-tol", self.gap_tol),
            ("viol-tol", self.viol_tol),
            ("inactive-tol", self.inactive_tol),
            ("stall-tol", self.stall_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HarnessError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(p) = self.labeled_fraction {
            if !(p > 0.0 && p < 1.0) {
                return Err(HarnessError::Config(format!("labeled fraction must be in (0, 1), got {p}")));
            }
        }
        if let ClChoice::Value(c) = self.cl {
            if !(c > 0.0 && c.is_finite()) {
                return Err(HarnessError::Config(format!("C_l must be positive, got {c}")));
            }
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(HarnessError::Config(format!("gamma must be positive, got {g}")));
            }
        }
        if let Some(t) = self.time_limit_sec {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(HarnessError::Config(format!("time limit must be non-negative, got {t}")));
            }
        }
        if self.max_cuts_factor == 0 {
            return Err(HarnessError::Config("max-cuts-factor must be at least 1".into()));
        }
        Ok(())
    }

    pub fn solve_params(&self) -> SolveParams {
        SolveParams {
            gap: self.gap_tol,
            time_limit: self.time_limit_sec.map(Duration::from_secs_f64),
            cuts: CutParams {
                max_cuts_factor: self.max_cuts_factor,
                viol_tol: self.viol_tol,
                inactive_tol: self.inactive_tol,
                stall_tol: self.stall_tol,
                gap_target: self.gap_tol,
                ..CutParams::default()
            },
            ..SolveParams::default()
        }
    }
}

/// Failure of one pipeline stage.
#[derive(Debug, Clone, Serialize)]
pub struct StageError {
    pub stage: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Report {
    pub instance: String,
    pub n: usize,
    pub l: usize,
    pub kernel: String,
    pub gamma: Option<f64>,
    pub cl: f64,
    pub cu: f64,
    pub lb: Option<f64>,
    pub ub: Option<f64>,
    pub gap_percent: Option<f64>,
    pub nodes: usize,
    pub wall_time_sec: f64,
    pub status: String,
    /// Labels in the row order of the input.
    pub labeling: Vec<i8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_accuracy_percent: Option<f64>,
    pub seed: u64,
    pub balancing: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<StageError>,
}

/// Everything the solver needs, in solver order (labeled rows first).
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    pub order: Vec<usize>,
    pub kernel: KernelSpec,
    pub c_l: f64,
    pub c_u: f64,
    pub problem: ProblemData,
    pub baseline_accuracy: Option<f64>,
}

fn stage<T>(name: &'static str, r: Result<T>) -> std::result::Result<T, StageError> {
    r.map_err(|e| StageError {
        stage: name,
        message: e.to_string(),
    })
}

fn kernel_spec(choice: KernelChoice, gamma: Option<f64>, d: usize) -> Result<KernelSpec> {
    Ok(match choice {
        KernelChoice::Linear => KernelSpec::Linear,
        _ => KernelSpec::Rbf {
            gamma: match gamma {
                Some(g) => g,
                None => default_gamma(d)?,
            },
        },
    })
}

/// `C_u = factor · l/(n-l) · C_l`.
pub fn unlabeled_penalty(cu_factor: f64, l: usize, n: usize, c_l: f64) -> f64 {
    cu_factor * l as f64 / (n - l) as f64 * c_l
}

/// All stages up to and including problem assembly.
pub fn prepare(cfg: &RunConfig, balancing: bool) -> std::result::Result<Prepared, StageError> {
    stage("config", cfg.validate())?;
    let mut d = stage("load", cfg.data.load(cfg.seed))?;
    if d.len() < 2 {
        return Err(StageError {
            stage: "load",
            message: "need at least two rows".into(),
        });
    }
    d.features = standardize(&d.features);
    if let Some(p) = cfg.labeled_fraction {
        d = stage("mask", mask_labels(&d, p, cfg.seed))?;
    }
    let l = d.labeled_indices().len();
    if l == 0 || l == d.len() {
        return Err(StageError {
            stage: "mask",
            message: format!("need labeled and unlabeled rows, got {l} of {}", d.len()),
        });
    }
    let rbf = kernel_spec(KernelChoice::Rbf, cfg.gamma, d.dim());
    let rbf = stage("kernel", rbf)?;
    let (kernel, c_l) = match (cfg.kernel, cfg.cl) {
        (KernelChoice::Cv, _) | (_, ClChoice::Cv) => {
            let kernels = match cfg.kernel {
                KernelChoice::Linear => vec![KernelSpec::Linear],
                KernelChoice::Rbf => vec![rbf],
                KernelChoice::Cv => vec![KernelSpec::Linear, rbf],
            };
            let grid = match cfg.cl {
                ClChoice::Value(c) => vec![c],
                ClChoice::Cv => default_cl_grid(),
            };
            let k = cfg.cv_folds.min(l);
            let cv = stage("cv", cross_validate(&d, &grid, &kernels, k, cfg.seed))?;
            (cv.kernel, cv.c_l)
        }
        (KernelChoice::Linear, ClChoice::Value(c)) => (KernelSpec::Linear, c),
        (KernelChoice::Rbf, ClChoice::Value(c)) => (rbf, c),
    };
    let baseline = stage("baseline", baseline_svm(&d, &kernel, c_l))?;
    let order = d.solver_order();
    let n = d.len();
    let c_u = unlabeled_penalty(cfg.cu_factor, l, n, c_l);
    let labels: Vec<f64> = order[..l]
        .iter()
        .map(|&i| d.labels[i].expect("labeled rows carry a label"))
        .collect();
    let gram = stage("assemble", gram_matrix(&d.rows(&order), &kernel).map_err(HarnessError::from))?;
    let problem = stage(
        "assemble",
        assemble_problem(&gram, &labels, c_l, c_u, balancing).map_err(HarnessError::from),
    )?;
    Ok(Prepared {
        dataset: d,
        order,
        kernel,
        c_l,
        c_u,
        problem,
        baseline_accuracy: baseline.accuracy,
    })
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::OptimalWithinGap => "optimal",
        SolveStatus::TimeLimit => "time_limit",
        SolveStatus::NodeLimit => "node_limit",
        SolveStatus::Infeasible => "infeasible",
    }
}

fn instance_name(cfg: &RunConfig) -> String {
    match &cfg.data {
        DataSource::Csv { path, .. } => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".into()),
        DataSource::Synthetic { name, n } => format!("{name}_{n}"),
    }
}

/// Runs the full pipeline. Failures are recorded in `Report::error`.
pub fn run_benchmark(cfg: &RunConfig) -> Report {
    let start = Instant::now();
    let mut report = Report {
        instance: instance_name(cfg),
        seed: cfg.seed,
        balancing: cfg.balancing,
        status: "error".into(),
        ..Report::default()
    };
    let prep = match prepare(cfg, cfg.balancing) {
        Ok(p) => p,
        Err(e) => {
            report.error = Some(e);
            report.wall_time_sec = start.elapsed().as_secs_f64();
            return report;
        }
    };
    let p = &prep.problem;
    report.n = p.n();
    report.l = p.l();
    report.kernel = prep.kernel.name().into();
    report.gamma = match prep.kernel {
        KernelSpec::Rbf { gamma } => Some(gamma),
        _ => None,
    };
    report.cl = prep.c_l;
    report.cu = prep.c_u;
    report.baseline_accuracy_percent = prep.baseline_accuracy;

    match solve(p, &cfg.solve_params()) {
        Ok(sol) => {
            report.status = status_name(sol.status).into();
            report.nodes = sol.nodes_processed;
            if sol.lower_bound.is_finite() {
                report.lb = Some(sol.lower_bound);
            }
            if let Some(inc) = &sol.incumbent {
                debug_assert!(check_feasible(p, &inc.point, 1e-6));
                report.ub = Some(inc.objective);
                report.gap_percent = percentage_gap(inc.objective, sol.lower_bound).ok();
                let mut labeling = vec![0i8; p.n()];
                for (k, &row) in prep.order.iter().enumerate() {
                    labeling[row] = if inc.labeling.values()[k] > 0.0 { 1 } else { -1 };
                }
                let pred: Vec<f64> = labeling.iter().map(|&v| v as f64).collect();
                report.accuracy_percent = prep
                    .dataset
                    .truth()
                    .and_then(|t| accuracy(&pred, &t, &prep.dataset.labeled_mask));
                report.labeling = labeling;
            }
        }
        Err(e) => {
            report.error = Some(StageError {
                stage: "solve",
                message: e.to_string(),
            });
        }
    }
    report.wall_time_sec = start.elapsed().as_secs_f64();
    report
}

/// One relaxation's bound at the root, against the common upper bound.
#[derive(Debug, Clone, Serialize)]
pub struct BoundEntry {
    pub lb: f64,
    pub gap_percent: Option<f64>,
    pub time_sec: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub instance: String,
    pub n: usize,
    pub l: usize,
    pub kernel: String,
    pub cl: f64,
    pub cu: f64,
    pub ub: Option<f64>,
    pub qp: Option<BoundEntry>,
    pub qp_lagrangian: Option<BoundEntry>,
    pub sdp: Option<BoundEntry>,
    pub sdp_rlt: Option<BoundEntry>,
    /// Cutting-plane iterations of the root SDP-RLT bound.
    pub cut_iterations: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<StageError>,
}

/// Root bounds of the four relaxations without the balancing row. The root
/// branch-and-cut node provides the SDP-RLT bound, the upper bound and the
/// OBBT boxes that the other relaxations reuse.
pub fn run_bounds(cfg: &RunConfig) -> BoundsReport {
    let mut out = BoundsReport {
        instance: instance_name(cfg),
        n: 0,
        l: 0,
        kernel: String::new(),
        cl: 0.0,
        cu: 0.0,
        ub: None,
        qp: None,
        qp_lagrangian: None,
        sdp: None,
        sdp_rlt: None,
        cut_iterations: 0,
        seed: cfg.seed,
        error: None,
    };
    let prep = match prepare(cfg, false) {
        Ok(p) => p,
        Err(e) => {
            out.error = Some(e);
            return out;
        }
    };
    let p = &prep.problem;
    out.n = p.n();
    out.l = p.l();
    out.kernel = prep.kernel.name().into();
    out.cl = prep.c_l;
    out.cu = prep.c_u;

    let params = SolveParams {
        node_limit: Some(1),
        gap: 0.0,
        ..cfg.solve_params()
    };
    let t = Instant::now();
    let root = match solve(p, &params) {
        Ok(r) => r,
        Err(e) => {
            out.error = Some(StageError {
                stage: "solve",
                message: e.to_string(),
            });
            return out;
        }
    };
    let rlt_time = t.elapsed().as_secs_f64();
    let ub = root.upper_bound();
    out.ub = ub.is_finite().then_some(ub);
    let gap = |lb: f64| percentage_gap(ub, lb).ok();
    out.cut_iterations = root.nodes.first().map_or(0, |r| r.cut_iterations);
    out.sdp_rlt = Some(BoundEntry {
        lb: root.root_lower_bound,
        gap_percent: gap(root.root_lower_bound),
        time_sec: rlt_time,
    });
    let boxes = &root.root_boxes;
    let timed = |f: &dyn Fn() -> s3vm_core::Result<f64>| -> std::result::Result<BoundEntry, StageError> {
        let t = Instant::now();
        let lb = f().map_err(|e| StageError {
            stage: "bounds",
            message: e.to_string(),
        })?;
        Ok(BoundEntry {
            lb,
            gap_percent: gap(lb),
            time_sec: t.elapsed().as_secs_f64(),
        })
    };
    let mut first_err = None;
    let mut keep = |r: std::result::Result<BoundEntry, StageError>| match r {
        Ok(b) => Some(b),
        Err(e) => {
            first_err.get_or_insert(e);
            None
        }
    };
    out.qp = keep(timed(&|| qp_bound(p, boxes)));
    out.qp_lagrangian = keep(timed(&|| qp_lagrangian_bound(p, boxes)));
    out.sdp = keep(timed(&|| basic_sdp_bound(p, boxes)));
    out.error = first_err;
    out
}

/// Solves every labeled fraction and seed, and renders a CSV summary.
pub fn run_sweep(base: &RunConfig, fractions: &[f64], seeds: &[u64]) -> Result<(Vec<Report>, String)> {
    let mut reports = Vec::new();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "instance", "seed", "labeled_fraction", "n", "l", "kernel", "cl", "cu", "lb", "ub", "gap_percent", "nodes",
        "wall_time_sec", "status", "accuracy_percent", "baseline_accuracy_percent", "error",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for &frac in fractions {
        for &seed in seeds {
            let cfg = RunConfig {
                labeled_fraction: Some(frac),
                seed,
                ..base.clone()
            };
            let r = run_benchmark(&cfg);
            w.write_record([
                r.instance.clone(),
                seed.to_string(),
                frac.to_string(),
                r.n.to_string(),
                r.l.to_string(),
                r.kernel.clone(),
                r.cl.to_string(),
                r.cu.to_string(),
                opt(r.lb),
                opt(r.ub),
                opt(r.gap_percent),
                r.nodes.to_string(),
                r.wall_time_sec.to_string(),
                r.status.clone(),
                opt(r.accuracy_percent),
                opt(r.baseline_accuracy_percent),
                r.error.as_ref().map(|e| format!("{}: {}", e.stage, e.message)).unwrap_or_default(),
            ])?;
            reports.push(r);
        }
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    Ok((reports, String::from_utf8(bytes).expect("csv output is utf-8")))
}
