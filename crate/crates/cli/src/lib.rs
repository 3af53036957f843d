//! Library side of the command-line front end: CSV formats, the synthetic
//! generator, and the subcommand implementations. The `comlasso` binary is a
//! thin argument-parsing shim over [`commands`]; keeping the logic here lets
//! integration tests drive the same code the binary runs.

pub mod commands;
pub mod gen;
pub mod io;

use std::path::PathBuf;

use clap::{Args, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}, row {row}: {msg}")]
    Data { path: String, row: usize, msg: String },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Model(#[from] comlasso_core::ModelError),
}

/// Classification losses compare the margin `y * x'beta`; labels must be +/-1.
#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Regression,
    Classification,
}

#[derive(Args)]
pub struct DataArgs {
    /// Data CSV: header row, first column the response, the rest components.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,

    /// Group map CSV with columns column_name,group_label,d_weight.
    /// Default: a single group with a zero-sum constraint.
    #[arg(long, value_name = "FILE")]
    pub groups: Option<PathBuf>,

    /// quadratic | asymmetric-l2 | huber-regression | squared-hinge | huber-hinge
    #[arg(long, default_value = "quadratic")]
    pub loss: String,

    /// Knot parameter h of the huber/asymmetric families, or the margin
    /// shift of squared-hinge.
    #[arg(long, value_name = "VALUE")]
    pub loss_param: Option<f64>,

    #[arg(long, value_enum, default_value_t = Task::Regression)]
    pub task: Task,

    /// Rescale each row onto the simplex instead of rejecting row-sum errors.
    #[arg(long)]
    pub normalize: bool,

    /// Mix rows to (u + c) / (1 + p c) before the log transform; required
    /// when components are zero.
    #[arg(long, value_name = "C")]
    pub pseudocount: Option<f64>,

    /// Treat the feature columns as a ready-made design matrix (no simplex
    /// validation, no log transform).
    #[arg(long)]
    pub raw: bool,
}

#[derive(Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Kink budget (default 10 * min(n, p) + 100).
    #[arg(long)]
    pub max_kinks: Option<usize>,

    /// Sweep down to this lambda instead of 0.
    #[arg(long, default_value_t = 0.0)]
    pub lambda_min: f64,

    /// Reweight the penalty by data-driven pilot weights before fitting.
    #[arg(long)]
    pub adaptive_weights: bool,

    /// Write the kink-by-kink path here.
    #[arg(long, value_name = "FILE")]
    pub out_path: Option<PathBuf>,

    /// Write plot coordinates (coefficient,l1_fraction,beta) here.
    #[arg(long, value_name = "FILE")]
    pub out_plot: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Path CSV produced by `fit --out-path`.
    #[arg(long, value_name = "FILE")]
    pub path_file: PathBuf,

    /// Optimality tolerance (relative to the problem's gradient scale).
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,

    /// Also re-solve this many random lambdas with the independent
    /// fixed-lambda solver and compare coefficients.
    #[arg(long, value_name = "N")]
    pub oracle: Option<usize>,

    /// Largest allowed coefficient gap against the oracle.
    #[arg(long, default_value_t = 1e-4)]
    pub oracle_tol: f64,

    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Fold count, or 'loo' for leave-one-out.
    #[arg(long, default_value = "5")]
    pub folds: String,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Spread fold fits over up to this many threads (results are
    /// identical regardless).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,

    /// Write the lambda,score,chosen table here.
    #[arg(long, value_name = "FILE")]
    pub out_report: Option<PathBuf>,
}

#[derive(Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long, default_value_t = 100)]
    pub subsamples: usize,

    /// Penalty multipliers are drawn uniformly from [weakness, 1].
    #[arg(long, default_value_t = 0.5)]
    pub weakness: f64,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Rows per subsample (default n/2).
    #[arg(long)]
    pub subsample_size: Option<usize>,

    /// Spread subsample fits over up to this many threads (results are
    /// identical regardless).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,

    /// Write the column_name,probability table here.
    #[arg(long, value_name = "FILE")]
    pub out_report: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Number of samples.
    #[arg(long)]
    pub n: usize,

    /// Comma-separated group sizes, e.g. '200' or '10,10,10'. The first
    /// group carries the planted nonzero coefficients and needs >= 8
    /// components.
    #[arg(long)]
    pub groups: String,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, value_name = "FILE", default_value = "simulated_data.csv")]
    pub out_data: PathBuf,

    #[arg(long, value_name = "FILE", default_value = "simulated_truth.csv")]
    pub out_truth: PathBuf,

    #[arg(long, value_name = "FILE", default_value = "simulated_groups.csv")]
    pub out_groups: PathBuf,
}

