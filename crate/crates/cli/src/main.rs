use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use s3vm_cli::bench::{run_bounds, run_sweep, ClChoice, DataSource, KernelChoice};
use s3vm_cli::{run_benchmark, HarnessError, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelArg {
    Linear,
    Rbf,
    Cv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Solve,
    Bounds,
    Sweep,
}

/// Exact semi-supervised SVM solver.
#[derive(Debug, Parser)]
#[command(name = "s3vm", version)]
struct Args {
    /// CSV file, or `synthetic:<two_moons|blobs|three_clusters>[:n]`.
    #[arg(long)]
    data: String,
    /// Zero-based label column (default: last).
    #[arg(long)]
    label_col: Option<usize>,
    /// Fraction of labels kept per class. In sweep mode, a comma-separated list.
    #[arg(long)]
    labeled_fraction: Option<String>,
    /// Seed. In sweep mode, a comma-separated list.
    #[arg(long, default_value = "0")]
    seed: String,
    #[arg(long, value_enum, default_value = "rbf")]
    kernel: KernelArg,
    /// RBF width or `auto` for 1/d.
    #[arg(long, default_value = "auto")]
    gamma: String,
    /// Labeled penalty or `cv`.
    #[arg(long, default_value = "1")]
    cl: String,
    #[arg(long, default_value_t = 0.2)]
    cu_factor: f64,
    #[arg(long, value_enum, default_value = "on")]
    balancing: OnOff,
    /// Target percentage gap.
    #[arg(long, default_value_t = 0.1)]
    gap_tol: f64,
    #[arg(long)]
    time_limit_sec: Option<f64>,
    #[arg(long, default_value_t = 5)]
    max_cuts_factor: usize,
    #[arg(long, default_value_t = 1e-2)]
    viol_tol: f64,
    #[arg(long, default_value_t = 1e-4)]
    inactive_tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    stall_tol: f64,
    /// Folds for cross-validation.
    #[arg(long, default_value_t = 10)]
    cv_folds: usize,
    #[arg(long, value_enum, default_value = "solve")]
    mode: ModeArg,
    /// Output file for the JSON report (stdout when absent). Sweeps also
    /// write a CSV summary next to it.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Accepted for compatibility; runs are always executed one at a time.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Accepted for compatibility; single-worker runs are deterministic.
    #[arg(long)]
    deterministic: bool,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, HarnessError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad {what} {v:?}")))
        })
        .collect()
}

fn config(a: &Args) -> Result<RunConfig, HarnessError> {
    let gamma = match a.gamma.as_str() {
        "auto" => None,
        v => Some(parse_list::<f64>(v, "gamma")?[0]),
    };
    let cl = match a.cl.as_str() {
        "cv" => ClChoice::Cv,
        v => ClChoice::Value(parse_list::<f64>(v, "C_l")?[0]),
    };
    let cfg = RunConfig {
        data: DataSource::parse(&a.data, a.label_col)?,
        labeled_fraction: None,
        seed: 0,
        kernel: match a.kernel {
            KernelArg::Linear => KernelChoice::Linear,
            KernelArg::Rbf => KernelChoice::Rbf,
            KernelArg::Cv => KernelChoice::Cv,
        },
        gamma,
        cl,
        cu_factor: a.cu_factor,
        balancing: matches!(a.balancing, OnOff::On),
        gap_tol: a.gap_tol,
        time_limit_sec: a.time_limit_sec,
        cv_folds: a.cv_folds,
        max_cuts_factor: a.max_cuts_factor,
        viol_tol: a.viol_tol,
        inactive_tol: a.inactive_tol,
        stall_tol: a.stall_tol,
    };
    Ok(cfg)
}

fn emit(json: String, output: &Option<PathBuf>) -> Result<(), HarnessError> {
    match output {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }
    Ok(())
}

fn run(a: Args) -> Result<bool, HarnessError> {
    if a.workers > 1 {
        eprintln!("note: --workers {} ignored, running sequentially", a.workers);
    }
    let mut cfg = config(&a)?;
    let fractions: Vec<f64> = match &a.labeled_fraction {
        Some(s) => parse_list(s, "labeled fraction")?,
        None => Vec::new(),
    };
    let seeds: Vec<u64> = parse_list(&a.seed, "seed")?;
    match a.mode {
        ModeArg::Sweep => {
            if fractions.is_empty() {
                return Err(HarnessError::Config("sweep mode needs --labeled-fraction".into()));
            }
            let (reports, summary) = run_sweep(&cfg, &fractions, &seeds)?;
            if let Some(path) = &a.output {
                std::fs::write(path.with_extension("csv"), &summary)?;
            } else {
                eprint!("{summary}");
            }
            let ok = reports.iter().all(|r| r.error.is_none());
            emit(serde_json::to_string_pretty(&reports)?, &a.output)?;
            Ok(ok)
        }
        mode => {
            if fractions.len() > 1 || seeds.len() > 1 {
                return Err(HarnessError::Config("lists are only accepted in sweep mode".into()));
            }
            cfg.labeled_fraction = fractions.first().copied();
            cfg.seed = seeds[0];
            if matches!(mode, ModeArg::Bounds) {
                let r = run_bounds(&cfg);
                let ok = r.error.is_none();
                emit(serde_json::to_string_pretty(&r)?, &a.output)?;
                Ok(ok)
            } else {
                let r = run_benchmark(&cfg);
                let ok = r.error.is_none();
                emit(serde_json::to_string_pretty(&r)?, &a.output)?;
                Ok(ok)
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
