//! Command-line flags. Every value is optional here so that config files
//! can supply it; defaults are applied when the command runs.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "dirnorm",
    version,
    about = "Normal approximation to the Dirichlet density: seeded experiments emitting CSV"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Shape weights alpha_1..alpha_d, comma separated
    #[arg(long, global = true, value_parser = parse_f64, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,

    /// Weight of the last coordinate
    #[arg(long, global = true, value_parser = parse_f64)]
    pub beta: Option<f64>,

    /// Base seed, decimal or 0x-prefixed hex [default: 0x5EED]
    #[arg(long, global = true, value_parser = parse_seed)]
    pub seed: Option<u64>,

    /// Worker threads [default: DIRNORM_THREADS, else all cores]
    #[arg(long, global = true, value_parser = parse_usize)]
    pub threads: Option<usize>,

    /// Write CSV here instead of standard output
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Defaults file with one `key = value` per line
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sup errors of the truncated log-ratio expansions and their exponents
    Expansion(ExpansionArgs),
    /// Closed-form central moments against exact arithmetic
    Moments(MomentsArgs),
    /// Total variation distance between the Dirichlet and its normal match
    Tv(TvArgs),
    /// Variance of the Dirichlet kernel density estimator
    Kde(KdeArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Smallest scale N
    #[arg(long, value_parser = parse_f64)]
    pub n_min: Option<f64>,

    /// Largest scale N
    #[arg(long, value_parser = parse_f64)]
    pub n_max: Option<f64>,

    /// Number of log-spaced scales
    #[arg(long, value_parser = parse_usize)]
    pub n_points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExpansionArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,

    /// Grid points per axis of the evaluation box (odd) [default: 41]
    #[arg(long, value_parser = parse_usize)]
    pub grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,

    /// Extra random parameter instances checked at orders two and three [default: 200]
    #[arg(long, value_parser = parse_usize)]
    pub random: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TvArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,

    /// `quadrature` (d <= 2) or `monte-carlo` [default: quadrature]
    #[arg(long)]
    pub method: Option<String>,

    /// Monte Carlo sample size [default: 1000000]
    #[arg(long, value_parser = parse_usize)]
    pub samples: Option<usize>,

    /// Quadrature refinement levels [default: 3]
    #[arg(long, value_parser = parse_usize)]
    pub refinement: Option<usize>,
}

#[derive(Debug, Args)]
pub struct KdeArgs {
    /// Evaluation point s_1..s_d, comma separated [default: 0.5]
    #[arg(long, value_parser = parse_f64, value_delimiter = ',')]
    pub point: Option<Vec<f64>>,

    /// Bandwidths, comma separated [default: 0.005]
    #[arg(long, value_parser = parse_f64, value_delimiter = ',')]
    pub bandwidth: Option<Vec<f64>>,

    /// Data set sizes, comma separated [default: 10000]
    #[arg(long, value_parser = parse_usize, value_delimiter = ',')]
    pub sample_size: Option<Vec<usize>>,

    /// Independent data sets per row [default: 400]
    #[arg(long, value_parser = parse_usize)]
    pub replicates: Option<usize>,

    /// `uniform` or `linear:w_1,...,w_{d+1}` [default: uniform]
    #[arg(long)]
    pub truth: Option<String>,
}

pub fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

pub fn parse_usize(s: &str) -> Result<usize, String> {
    let t = s.trim();
    if let Ok(v) = t.parse() {
        return Ok(v);
    }
    // counts such as 1e6
    match t.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1e18 => Ok(v as usize),
        _ => Err(format!("`{s}` is not a non-negative integer")),
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_f64).collect()
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',').map(parse_usize).collect()
}

pub fn parse_seed(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    };
    parsed.map_err(|_| format!("`{s}` is not a valid seed"))
}
