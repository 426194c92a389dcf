//! `robot` — outlier-robust optimal transport from the command line.
//!
//! Subcommands: `solve` (robust transport value between two point files),
//! `detect` (outlier detection against a clean reference), `estimate-mean`
//! (stochastic robust mean estimation), `gen` (synthetic data), `bench
//! equivalence` (formulation-equivalence report), and `scan-lambda`
//! (outlier sets along a λ grid with nesting verdicts).
//!
//! Machine-readable results go to stdout as JSON; errors go to stderr as
//! one-line JSON `{error, detail}` with exit codes 1 (malformed CSV),
//! 2 (invalid flags), 3 (solver failure).

mod io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array1;
use serde_json::{json, Value};

use robot_core::cost::{CostMatrix, CostSpec};
use robot_core::datagen::{
    gen_cluster_outliers, gen_huber_cauchy, gen_huber_gaussian, ContaminationMode,
};
use robot_core::detect::{detect_outliers, scan_lambda, select_lambda, DetectMethod, DetectOptions};
use robot_core::diagnostics::equivalence_suite;
use robot_core::reconstruct::slacks_only;
use robot_core::semidiscrete::{estimate_mean, SgdConfig};
use robot_core::sinkhorn::{sinkhorn_solve, SinkhornOptions};
use robot_core::transport::solve_transport;

#[derive(Debug)]
pub enum CliError {
    Csv(String),
    Flags(String),
    Solver(robot_core::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Csv(msg) | CliError::Flags(msg) => write!(f, "{msg}"),
            CliError::Solver(e) => write!(f, "{e}"),
        }
    }
}

impl From<robot_core::Error> for CliError {
    fn from(e: robot_core::Error) -> Self {
        CliError::Solver(e)
    }
}

#[derive(Parser)]
#[command(name = "robot", version, about = "Outlier-robust optimal transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Robust transport value between a source and a target point cloud.
    Solve(SolveArgs),
    /// Flag outliers in a contaminated sample against a clean reference.
    Detect(DetectArgs),
    /// Robust mean estimation with the shift generator.
    EstimateMean(EstimateArgs),
    /// Generate seeded synthetic datasets.
    Gen(GenArgs),
    /// Numerical verification reports.
    Bench {
        #[command(subcommand)]
        suite: BenchCommand,
    },
    /// Outlier sets along an ascending λ grid, with nesting verdicts.
    ScanLambda(ScanArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CostKind {
    Sqeuclidean,
    Euclidean,
}

impl From<CostKind> for CostSpec {
    fn from(kind: CostKind) -> Self {
        match kind {
            CostKind::Sqeuclidean => CostSpec::SquaredEuclidean,
            CostKind::Euclidean => CostSpec::Euclidean,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Sinkhorn,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Truncation level λ; `inf` disables truncation (vanilla OT).
    #[arg(long)]
    lambda: String,
    #[arg(long, value_enum, default_value = "exact")]
    method: Method,
    /// Entropic regularization (sinkhorn method).
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "sqeuclidean")]
    cost: CostKind,
    /// Marginal L1 residual target (sinkhorn method).
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Write the transport plan as dense CSV.
    #[arg(long)]
    plan_out: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    contaminated: PathBuf,
    #[arg(long)]
    clean: PathBuf,
    /// Truncation level λ, or `auto` for the matched-cost heuristic.
    #[arg(long)]
    lambda: String,
    #[arg(long, value_enum, default_value = "exact")]
    method: Method,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "sqeuclidean")]
    cost: CostKind,
    /// Matched-cost percentile for `--lambda auto`.
    #[arg(long, default_value_t = 99.0)]
    percentile: f64,
    /// Subsample size for `--lambda auto` (default min(n/2, 400)).
    #[arg(long)]
    subsample_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the flagging threshold on μ+s₁.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    lambda: String,
    #[arg(long, default_value_t = 0.02)]
    alpha: f64,
    #[arg(long, default_value_t = 6000)]
    outer: usize,
    #[arg(long, default_value_t = 20)]
    inner: usize,
    #[arg(long, default_value_t = 0.005)]
    tau: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Reference mean; adds an `error_vs` field with ‖θ − reference‖₂.
    #[arg(long)]
    true_mean: Option<String>,
    /// Explicit warm start (default: coordinate-wise median of the data).
    #[arg(long)]
    theta_init: Option<String>,
    /// Write the θ trajectory as CSV.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenModel {
    GaussianHuber,
    CauchyHuber,
    Clusters,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    model: GenModel,
    /// Sample size (huber models).
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    d: usize,
    /// Contamination fraction (huber models).
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    /// Clean location, comma-separated (default all zeros).
    #[arg(long)]
    eta0: Option<String>,
    /// Outlier location, comma-separated (default all twos).
    #[arg(long)]
    eta1: Option<String>,
    /// Exactly ⌊εn⌋ outliers instead of per-point Bernoulli(ε).
    #[arg(long)]
    fixed_count: bool,
    /// Clean cluster size (clusters model).
    #[arg(long, default_value_t = 800)]
    n_clean: usize,
    #[arg(long, default_value_t = 200)]
    n_out: usize,
    #[arg(long, default_value_t = 6.0)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write the ground-truth outlier mask.
    #[arg(long)]
    mask_out: Option<PathBuf>,
    /// Write the clean reference sample (clusters model).
    #[arg(long)]
    clean_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Solve all formulations on random instances and report objective gaps.
    Equivalence(EquivalenceArgs),
}

#[derive(Args)]
struct EquivalenceArgs {
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 8)]
    max_size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// λ values cycled across trials.
    #[arg(long, default_value = "0.1,0.5,1.0")]
    lambdas: String,
    /// Per-trial long-format CSV.
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    contaminated: PathBuf,
    #[arg(long)]
    clean: PathBuf,
    /// Ascending λ grid, comma-separated.
    #[arg(long)]
    grid: String,
    #[arg(long, value_enum, default_value = "exact")]
    method: Method,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "sqeuclidean")]
    cost: CostKind,
    /// Flagged (lambda, index) pairs as long-format CSV.
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        let (code, kind) = match &e {
            CliError::Csv(_) => (1, "malformed_csv"),
            CliError::Flags(_) => (2, "invalid_flags"),
            CliError::Solver(_) => (3, "solver_failure"),
        };
        eprintln!("{}", json!({ "error": kind, "detail": e.to_string() }));
        std::process::exit(code);
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Detect(args) => cmd_detect(args),
        Command::EstimateMean(args) => cmd_estimate_mean(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Bench {
            suite: BenchCommand::Equivalence(args),
        } => cmd_bench_equivalence(args),
        Command::ScanLambda(args) => cmd_scan(args),
    }
}

fn lambda_json(lambda: f64) -> Value {
    if lambda.is_finite() {
        json!(lambda)
    } else {
        json!("inf")
    }
}

fn emit(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let lambda = io::parse_lambda(&args.lambda)?;
    let spec: CostSpec = args.cost.into();
    let mu = io::read_measure(&args.source)?;
    let nu = io::read_measure(&args.target)?;
    let cost = CostMatrix::from_points(mu.points(), nu.points(), spec)?;
    let truncated = cost.truncate(lambda)?;

    let (plan, report) = match args.method {
        Method::Exact => solve_transport(&mu, &nu, &truncated)?,
        Method::Sinkhorn => {
            let opts = SinkhornOptions {
                alpha: args.alpha,
                tol: args.tol,
                max_iter: args.max_iter,
                epsilon_scaling: false,
            };
            sinkhorn_solve(&mu, &nu, &truncated, &opts)?
        }
    };

    let slack_l1 = if lambda.is_finite() {
        let (s1, t1) = slacks_only(&plan, &cost, lambda)?;
        s1.iter().map(|v| v.abs()).sum::<f64>() + t1.iter().map(|v| v.abs()).sum::<f64>()
    } else {
        0.0
    };

    if let Some(path) = &args.plan_out {
        io::write_matrix(path, plan.mass())?;
    }

    emit(&json!({
        "objective": report.objective,
        "lambda": lambda_json(lambda),
        "method": match args.method { Method::Exact => "exact", Method::Sinkhorn => "sinkhorn" },
        "iterations": report.iterations,
        "row_residual": report.row_residual,
        "col_residual": report.col_residual,
        "slack_l1": slack_l1,
    }));
    Ok(())
}

fn cmd_detect(args: DetectArgs) -> Result<(), CliError> {
    let spec: CostSpec = args.cost.into();
    let contaminated = io::read_measure(&args.contaminated)?;
    let clean = io::read_measure(&args.clean)?;

    let lambda = if args.lambda.eq_ignore_ascii_case("auto") {
        let subsample = args
            .subsample_size
            .unwrap_or_else(|| (clean.len() / 2).min(400));
        select_lambda(&clean, subsample, args.percentile, spec, args.seed)?
    } else {
        io::parse_lambda(&args.lambda)?
    };

    let opts = DetectOptions {
        method: match args.method {
            Method::Exact => DetectMethod::Exact,
            Method::Sinkhorn => DetectMethod::Sinkhorn,
        },
        alpha: matches!(args.method, Method::Sinkhorn).then_some(args.alpha),
        threshold: args.threshold,
        sinkhorn_tol: args.tol,
        sinkhorn_max_iter: args.max_iter,
    };
    let result = detect_outliers(&contaminated, &clean, spec, lambda, &opts)?;

    emit(&json!({
        "outlier_indices": result.outlier_indices,
        "lambda": result.lambda,
        "threshold": result.threshold,
        "method": result.method,
        "slack": result.slack.to_vec(),
    }));
    Ok(())
}

fn cmd_estimate_mean(args: EstimateArgs) -> Result<(), CliError> {
    let data = io::read_measure(&args.data)?;
    let lambda = io::parse_lambda(&args.lambda)?;
    let theta_init = args
        .theta_init
        .as_deref()
        .map(io::parse_vector)
        .transpose()?;
    let true_mean: Option<Array1<f64>> = args
        .true_mean
        .as_deref()
        .map(io::parse_vector)
        .transpose()?;
    if let Some(reference) = &true_mean {
        if reference.len() != data.dim() {
            return Err(CliError::Flags(format!(
                "--true-mean has {} coordinates, data has {}",
                reference.len(),
                data.dim()
            )));
        }
    }

    let cfg = SgdConfig {
        lambda,
        alpha: args.alpha,
        outer_iters: args.outer,
        inner_iters: args.inner,
        theta_step: args.tau,
        dual_step: args.gamma,
        seed: args.seed,
        theta_init,
    };
    let trace = estimate_mean(&data, &cfg)?;

    if let Some(path) = &args.trace_out {
        io::write_points(path, trace.theta_trace.view(), None)?;
    }
    emit(&json!({
        "theta": trace.theta.to_vec(),
        "error_vs": true_mean.map(|reference| trace.final_error(reference.view())),
        "trace_path": args.trace_out.as_ref().map(|p| p.display().to_string()),
        "lambda": lambda_json(lambda),
        "seed": args.seed,
    }));
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let mode = if args.fixed_count {
        ContaminationMode::FixedCount
    } else {
        ContaminationMode::Bernoulli
    };
    let vector_flag =
        |text: Option<&String>, default: f64, d: usize| -> Result<Array1<f64>, CliError> {
            match text {
                None => Ok(Array1::from_elem(d, default)),
                Some(t) => {
                    let v = io::parse_vector(t)?;
                    if v.len() != d {
                        return Err(CliError::Flags(format!(
                            "expected {d} coordinates, got {}",
                            v.len()
                        )));
                    }
                    Ok(v)
                }
            }
        };

    let summary = match args.model {
        GenModel::GaussianHuber | GenModel::CauchyHuber => {
            let eta0 = vector_flag(args.eta0.as_ref(), 0.0, args.d)?;
            let eta1 = vector_flag(args.eta1.as_ref(), 2.0, args.d)?;
            let (measure, mask) = match args.model {
                GenModel::GaussianHuber => gen_huber_gaussian(
                    args.n,
                    args.d,
                    args.eps,
                    eta0.view(),
                    eta1.view(),
                    args.seed,
                    mode,
                )?,
                _ => gen_huber_cauchy(
                    args.n,
                    args.d,
                    args.eps,
                    eta0.view(),
                    eta1.view(),
                    args.seed,
                    mode,
                )?,
            };
            io::write_points(&args.out, measure.points(), None)?;
            if let Some(path) = &args.mask_out {
                io::write_mask(path, &mask)?;
            }
            json!({
                "model": match args.model { GenModel::GaussianHuber => "gaussian-huber", _ => "cauchy-huber" },
                "n": args.n,
                "d": args.d,
                "eps": args.eps,
                "outliers": mask.iter().filter(|&&m| m).count(),
                "seed": args.seed,
                "out": args.out.display().to_string(),
                "mask_out": args.mask_out.as_ref().map(|p| p.display().to_string()),
            })
        }
        GenModel::Clusters => {
            let clean_out = args.clean_out.as_ref().ok_or_else(|| {
                CliError::Flags("--clean-out is required for the clusters model".into())
            })?;
            let (contaminated, reference, mask) =
                gen_cluster_outliers(args.n_clean, args.n_out, args.d, args.separation, args.seed)?;
            io::write_points(&args.out, contaminated.points(), None)?;
            io::write_points(clean_out, reference.points(), None)?;
            if let Some(path) = &args.mask_out {
                io::write_mask(path, &mask)?;
            }
            json!({
                "model": "clusters",
                "n_clean": args.n_clean,
                "n_out": args.n_out,
                "d": args.d,
                "separation": args.separation,
                "seed": args.seed,
                "out": args.out.display().to_string(),
                "clean_out": clean_out.display().to_string(),
                "mask_out": args.mask_out.as_ref().map(|p| p.display().to_string()),
            })
        }
    };
    emit(&summary);
    Ok(())
}

fn cmd_bench_equivalence(args: EquivalenceArgs) -> Result<(), CliError> {
    let lambdas = io::parse_vector(&args.lambdas)?;
    if lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(CliError::Flags("lambdas must be positive reals".into()));
    }
    let kinds = [CostSpec::SquaredEuclidean, CostSpec::Euclidean];
    let start = std::time::Instant::now();
    let report = equivalence_suite(
        args.seed,
        args.trials,
        args.max_size,
        lambdas.as_slice().unwrap(),
        &kinds,
    )?;
    let seconds = start.elapsed().as_secs_f64();

    if let Some(path) = &args.csv_out {
        let mut writer = csv::Writer::from_path(path)
            .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;
        writer
            .write_record([
                "trial",
                "n",
                "m",
                "lambda",
                "cost",
                "f1",
                "f2",
                "f3",
                "f4",
                "reconstructed",
            ])
            .map_err(|e| CliError::Csv(e.to_string()))?;
        for case in &report.cases {
            writer
                .write_record([
                    case.trial.to_string(),
                    case.n.to_string(),
                    case.m.to_string(),
                    io::fmt_f64(case.lambda),
                    format!("{:?}", case.cost),
                    io::fmt_f64(case.f1),
                    io::fmt_f64(case.f2),
                    io::fmt_f64(case.f3),
                    io::fmt_f64(case.f4),
                    io::fmt_f64(case.reconstructed),
                ])
                .map_err(|e| CliError::Csv(e.to_string()))?;
        }
        writer.flush().map_err(|e| CliError::Csv(e.to_string()))?;
    }

    emit(&json!({
        "trials": report.trials,
        "seed": report.seed,
        "max_size": args.max_size,
        "lambdas": lambdas.to_vec(),
        "max_gap_f2": report.max_gap_f2,
        "max_gap_f3": report.max_gap_f3,
        "max_gap_f4": report.max_gap_f4,
        "max_gap_reconstruction": report.max_gap_reconstruction,
        "seconds": seconds,
    }));
    Ok(())
}

fn cmd_scan(args: ScanArgs) -> Result<(), CliError> {
    let spec: CostSpec = args.cost.into();
    let contaminated = io::read_measure(&args.contaminated)?;
    let clean = io::read_measure(&args.clean)?;
    let grid = io::parse_vector(&args.grid)?;
    if grid.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(CliError::Flags("grid must be positive reals".into()));
    }
    let opts = DetectOptions {
        method: match args.method {
            Method::Exact => DetectMethod::Exact,
            Method::Sinkhorn => DetectMethod::Sinkhorn,
        },
        alpha: matches!(args.method, Method::Sinkhorn).then_some(args.alpha),
        ..DetectOptions::default()
    };
    let report = scan_lambda(
        &contaminated,
        &clean,
        spec,
        grid.as_slice().unwrap(),
        &opts,
    )?;

    if let Some(path) = &args.csv_out {
        let mut writer = csv::Writer::from_path(path)
            .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;
        writer
            .write_record(["lambda", "outlier_index"])
            .map_err(|e| CliError::Csv(e.to_string()))?;
        for (lambda, set) in report.lambdas.iter().zip(report.outlier_sets.iter()) {
            for idx in set {
                writer
                    .write_record([io::fmt_f64(*lambda), idx.to_string()])
                    .map_err(|e| CliError::Csv(e.to_string()))?;
            }
        }
        writer.flush().map_err(|e| CliError::Csv(e.to_string()))?;
    }

    emit(&json!({
        "lambdas": report.lambdas,
        "outlier_sets": report.outlier_sets,
        "adjacent_pairs": report.adjacent_pairs,
        "nested": report.nested(),
        "violations": report.violations,
    }));
    Ok(())
}
