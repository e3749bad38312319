use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "sglasso", version, about = "Sparse precision estimation from indefinite covariance surrogates")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON file with defaults for the subcommand; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for simulation and cross-validation folds.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for `sweep`.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a dataset bundle.
    Simulate(SimulateArgs),
    /// Fit one estimator.
    Estimate(EstimateArgs),
    /// Fit estimators over λ and R grids and score them against the truth.
    Sweep(SweepArgs),
    /// Choose λ by BIC or cross-validation, then refit.
    Tune(TuneArgs),
    /// Build a conditional-dependence graph from a vote matrix.
    Graph(GraphArgs),
    /// Eigenvalue summary of the covariance surrogate.
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Ar1,
    StarBlock,
    ErdosRenyi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Noise {
    MissingData,
    KronSum,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Number of variables m.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Correlation parameter of AR1 / star-block models.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Edge count of an Erdős–Rényi model.
    #[arg(long)]
    pub edges: Option<usize>,
    #[arg(long, value_enum)]
    pub noise: Option<Noise>,
    /// Sampling rate(s): one value or one per column, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub zeta: Option<Vec<f64>>,
    /// Kronecker-sum noise level tr(B)/n.
    #[arg(long)]
    pub tau_b: Option<f64>,
    /// Edge count of the Erdős–Rényi row graph behind B (default n).
    #[arg(long)]
    pub b_edges: Option<usize>,
    /// Sample size.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CovKind {
    MissingData,
    KronSum,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Missing {
    Any,
    Empty,
    Na,
}

/// Where the data come from: a bundle directory or a raw CSV.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// Dataset bundle directory or raw data CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Covariance surrogate (required for raw CSV input).
    #[arg(long, value_enum)]
    pub covariance: Option<CovKind>,
    /// Noise level tr(B)/n for the Kronecker-sum surrogate.
    #[arg(long)]
    pub tau_b: Option<f64>,
    /// Known sampling rate(s) for raw CSV; estimated from the mask otherwise.
    #[arg(long, value_delimiter = ',')]
    pub zeta: Option<Vec<f64>>,
    /// Missing-cell token of raw CSV input.
    #[arg(long, value_enum, default_value = "any")]
    pub missing: Missing,
    /// Raw CSV has no header line.
    #[arg(long)]
    pub no_header: bool,
    /// Center observed entries of each column (sample covariance only).
    #[arg(long)]
    pub center: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Nonproj,
    Proj,
    Nodewise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PenaltyArg {
    L1,
    Scad,
    Mcp,
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    #[arg(long, value_enum)]
    pub variant: Option<Variant>,
    #[arg(long, value_enum)]
    pub penalty: Option<PenaltyArg>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// SCAD/MCP shape parameter (defaults 3.7 and 2.5).
    #[arg(long)]
    pub a: Option<f64>,
    /// Leave the diagonal unpenalized.
    #[arg(long)]
    pub no_penalize_diagonal: bool,
    /// Side-constraint radius R.
    #[arg(long, conflicts_with = "radius_scale")]
    pub radius: Option<f64>,
    /// R as a multiple of the oracle spectral norm (per-node ℓ1 norms for nodewise); needs a bundle.
    #[arg(long)]
    pub radius_scale: Option<f64>,
    /// ADMM penalty ρ.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Relative-change tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub spec: SpecArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Estimators such as `nonproj-l1`, `proj-mcp`, `nodewise`.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Absolute radii.
    #[arg(long, value_delimiter = ',', conflicts_with = "radius_scales")]
    pub radii: Option<Vec<f64>>,
    /// Radii as multiples of the oracle value.
    #[arg(long, value_delimiter = ',')]
    pub radius_scales: Option<Vec<f64>>,
    /// Simulate one dataset per seed from the config's `simulate` section instead of reading --input.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// MCP shape parameter.
    #[arg(long)]
    pub mcp_a: Option<f64>,
    /// SCAD shape parameter.
    #[arg(long)]
    pub scad_a: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub no_penalize_diagonal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Bic,
    Cv,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, value_enum)]
    pub criterion: Option<CriterionArg>,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Cross-validation folds.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Re-estimate ζ on each training fold.
    #[arg(long)]
    pub estimate_zeta: bool,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Vote CSV: rows are votes, columns are subjects (see --transpose).
    #[arg(long)]
    pub votes: PathBuf,
    /// `subject,party` CSV.
    #[arg(long)]
    pub parties: Option<PathBuf>,
    /// Minimum |partial correlation| for an edge.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub demean_by_party: bool,
    /// Rows are subjects and columns are votes.
    #[arg(long)]
    pub transpose: bool,
    /// Keep votes where every observed entry agrees.
    #[arg(long)]
    pub keep_unanimous: bool,
    /// Drop subjects observed on fewer than this fraction of votes.
    #[arg(long)]
    pub min_coverage: Option<f64>,
    #[arg(long, value_enum, default_value = "any")]
    pub missing: Missing,
    #[arg(long)]
    pub no_header: bool,
    #[command(flatten)]
    pub spec: SpecArgs,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Skip the elementwise-max PSD projection (leaves `max_eig_projected` null).
    #[arg(long)]
    pub skip_projection: bool,
}
