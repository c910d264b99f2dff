use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sdpower_core::experiments::Profile;

#[derive(Debug, Parser)]
#[command(name = "sdpower", version, about = "Power and type-I error of paired significance tests on simulated retrieval runs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit per-query score-distribution models from TREC runs and qrels.
    Fit(FitArgs),
    /// Type-I error rates of the five tests (writes type1.csv).
    Type1(ExperimentArgs),
    /// Power curves over the h grid (writes power.csv).
    Power(ExperimentArgs),
    /// Mean AP against h and the relative AP change at one h
    /// (writes validity_map.csv and delta_ap.csv).
    Validity(ValidityArgs),
    /// Run the five tests on a two-column file of per-query APs.
    Test(TestArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory (overrides the manifest's).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ModelSource {
    /// Fit models from the runs named in this manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Previously fitted models (models.csv).
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Hand-written mixture specification.
    #[arg(long)]
    pub synthetic: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long)]
    pub profile: Option<Profile>,
    /// Master seed; drawn from entropy and printed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Collection label for the CSV rows.
    #[arg(long)]
    pub collection: Option<String>,
    /// Query-set sizes, e.g. `10,20,30,40,50`.
    #[arg(long, value_delimiter = ',')]
    pub queries: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub alpha_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub h_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub resamples: Option<usize>,
    /// Scores drawn per synthetic list.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Significance level for power curves.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Statistic for the permutation and bootstrap tests: `mean` or `t`.
    #[arg(long)]
    pub statistic: Option<String>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidityArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
    /// Effect size for the relative AP change distribution.
    #[arg(long, default_value_t = 0.05)]
    pub delta_h: f64,
    /// Repetitions per system-query pair for the relative AP change.
    #[arg(long, default_value_t = 100)]
    pub delta_reps: usize,
    /// Lists per system, query and h for the mean-AP curve.
    #[arg(long)]
    pub simulations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Whitespace- or comma-separated `ap_a ap_b` rows, one per query.
    pub file: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = sdpower_core::stattests::DEFAULT_RESAMPLES)]
    pub resamples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "mean")]
    pub statistic: String,
}
