//! `hdmix`: batch experiments on high-dimensional Bayesian clustering.

mod commands;
mod plots;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "hdmix", version, about = "Merge-ratio limits, DP mixture clustering and projector checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact merge-ratio terms against their analytic limits over a p grid.
    Limits(LimitsArgs),
    /// Run the Gibbs sampler on one data set.
    Cluster(ClusterArgs),
    /// Sampler behavior across p under the robust and the naive prior.
    Sweep(SweepArgs),
    /// Median `‖(I + YYᵀ)⁻¹‖₂` for Gaussian data across p.
    Projector(ProjectorArgs),
    /// Regenerate every SVG in a directory from its CSV.
    Replot(ReplotArgs),
}

#[derive(clap::Args, Debug, Clone)]
pub struct LimitsArgs {
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    pub p_grid: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 2.0)]
    pub c2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1)]
    pub n1: usize,
    #[arg(long, default_value_t = 1)]
    pub n2: usize,
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub outdir: PathBuf,
}

#[derive(clap::Args, Debug, Clone)]
pub struct ProjectorArgs {
    #[arg(long, value_delimiter = ',', default_value = "50,200,1000")]
    pub p_grid: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub outdir: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitArg {
    Single,
    Singletons,
}

#[derive(clap::Args, Debug, Clone)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "50,2000")]
    pub p_grid: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Distance between the two component means along each coordinate.
    #[arg(long, default_value_t = 2.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 2.0)]
    pub c2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 5)]
    pub replicates: usize,
    #[arg(long, default_value_t = 200)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 50)]
    pub burnin: usize,
    #[arg(long, value_enum, default_value_t = InitArg::Single)]
    pub init: InitArg,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub outdir: PathBuf,
}

#[derive(clap::Args, Debug, Clone)]
pub struct ClusterArgs {
    /// Numeric CSV, one observation per row. Synthetic two-cluster data
    /// is generated when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Single-column CSV of true labels for `--input`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub p: usize,
    #[arg(long, default_value_t = 2.0)]
    pub separation: f64,
    /// Row-standardize the data before clustering.
    #[arg(long)]
    pub standardize: bool,
    /// `robust`, `naive` or `custom:<file>`.
    #[arg(long, default_value = "robust")]
    pub prior: String,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 2.0)]
    pub c2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 200)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 50)]
    pub burnin: usize,
    #[arg(long, value_enum, default_value_t = InitArg::Single)]
    pub init: InitArg,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub outdir: PathBuf,
}

#[derive(clap::Args, Debug, Clone)]
pub struct ReplotArgs {
    #[arg(long, default_value = ".")]
    pub outdir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Limits(a) => commands::limits(&a),
        Command::Cluster(a) => commands::cluster(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Projector(a) => commands::projector(&a),
        Command::Replot(a) => commands::replot(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hdmix: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
