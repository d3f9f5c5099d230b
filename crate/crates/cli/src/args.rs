use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gpdim::io::Dtype;
use gpdim::Metric;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "gpdim",
    version,
    about = "Correlation dimension of probability-vector trajectories"
)]
pub struct Cli {
    /// Worker threads for pair counting (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic sequence and write it as PSEQ.
    Simulate(SimulateArgs),
    /// Estimate the correlation dimension of a sequence.
    Analyze(AnalyzeArgs),
    /// Write only the correlation-integral curve.
    Curve(AnalyzeArgs),
    /// List rows that are not valid probability vectors.
    Validate(ValidateArgs),
    /// Fold the vocabulary by index modulo M and write a new PSEQ.
    Reduce(ReduceArgs),
    /// Run the distortion, oracle and gamma-merging checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    Ba,
    Fapa,
    Dirichlet,
    Uniform,
    Markov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    FisherRao,
    Euclidean,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::FisherRao => Metric::FisherRao,
            MetricArg::Euclidean => Metric::Euclidean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DtypeArg {
    F32,
    F64,
}

impl From<DtypeArg> for Dtype {
    fn from(d: DtypeArg) -> Self {
        match d {
            DtypeArg::F32 => Dtype::F32,
            DtypeArg::F64 => Dtype::F64,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub process: Process,
    /// Number of steps (rows).
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = DtypeArg::F64)]
    pub dtype: DtypeArg,
    /// Reduce rows by index modulo M while generating.
    #[arg(long)]
    pub m_groups: Option<usize>,

    /// Initial nodes (ba, fapa).
    #[arg(long, default_value_t = 1)]
    pub m0: usize,
    /// Edges per new node (ba, fapa).
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Truncation ratio (fapa).
    #[arg(long, default_value_t = 0.005)]
    pub kappa: f64,
    /// Node slots per row (ba, fapa); defaults to m0 + n.
    #[arg(long)]
    pub total_nodes: Option<usize>,

    /// Vocabulary size (dirichlet, uniform, markov).
    #[arg(long)]
    pub k: Option<usize>,
    /// Symmetric concentration per coordinate (dirichlet).
    #[arg(long, conflicts_with = "alpha_times_k")]
    pub alpha: Option<f64>,
    /// Symmetric concentration given as alpha * K (dirichlet), e.g. 5 for 5/K.
    #[arg(long)]
    pub alpha_times_k: Option<f64>,
    /// Use the (3, 0.2, 2.2e-5, ...) concentration vector (dirichlet).
    #[arg(long, conflicts_with_all = ["alpha", "alpha_times_k"])]
    pub local_fractal: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub input: PathBuf,
    /// Keep rows whose largest probability is below eta.
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,
    /// Keep every row.
    #[arg(long, conflicts_with_all = ["eta", "entropy_min", "entropy_max", "argmax"])]
    pub no_filter: bool,
    /// Lower entropy bound in bits.
    #[arg(long)]
    pub entropy_min: Option<f64>,
    /// Upper entropy bound in bits.
    #[arg(long)]
    pub entropy_max: Option<f64>,
    /// Keep rows whose argmax is this word and whose peak exceeds eta.
    #[arg(long)]
    pub argmax: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub m_groups: usize,
    #[arg(long, conflicts_with = "m_groups")]
    pub no_reduce: bool,
    #[arg(long, value_enum, default_value_t = MetricArg::FisherRao)]
    pub metric: MetricArg,
    /// Number of log-spaced grid edges.
    #[arg(long, default_value_t = 64)]
    pub edges: usize,
    /// Manual fit region `LO,HI` in distance units.
    #[arg(long, value_parser = parse_region)]
    pub region: Option<(f64, f64)>,
    /// Fewest rows the filter may leave.
    #[arg(long, default_value_t = 100)]
    pub min_points: usize,
    /// Also fit the first half of the rows.
    #[arg(long)]
    pub convergence: bool,
    /// Divide each row by its sum before validation.
    #[arg(long)]
    pub renormalize: bool,
    /// Row-sum tolerance (default by stored dtype).
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Recorded in the output; read from the sidecar when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Estimate JSON (analyze) or curve TSV (curve); stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write the curve TSV here (analyze).
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Most violations to print.
    #[arg(long, default_value_t = 20)]
    pub limit: usize,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub m_groups: usize,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum)]
    pub dtype: Option<DtypeArg>,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Print results as JSON lines.
    #[arg(long)]
    pub json: bool,
}

fn parse_region(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo > 0.0 && hi > lo) {
        return Err("need 0 < LO < HI".into());
    }
    Ok((lo, hi))
}
