use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "photocount", version, about = "Photon-counting records, waiting times, Fisher information and estimators")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Flat `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file, or `-` for stdout. Defaults to a file named after the
    /// subcommand in $PHOTOCOUNT_OUTPUT_DIR (or the working directory).
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a click record.
    Simulate(SimulateArgs),
    /// Tabulate waiting-time densities, one table per efficiency.
    Wtd(WtdArgs),
    /// Fisher information over a parameter grid.
    Fisher(FisherArgs),
    /// Posterior over candidate parameter values for a record.
    Bayes(BayesArgs),
    /// Linear-estimator trace for a record.
    Estimate(EstimateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Observation time in units of 1/gamma.
    #[arg(long, conflicts_with = "clicks")]
    pub duration: Option<f64>,
    /// Stop at this many reported clicks.
    #[arg(long)]
    pub clicks: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed of the efficiency thinning; defaults to the simulation seed.
    #[arg(long)]
    pub thinning_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct WtdArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Comma-separated efficiencies.
    #[arg(long, value_delimiter = ',')]
    pub eta: Vec<f64>,
    #[arg(long)]
    pub mass_target: Option<f64>,
    /// Maximum integrator step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Override the grid step.
    #[arg(long)]
    pub dtau: Option<f64>,
    /// Override the grid length.
    #[arg(long)]
    pub tau_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FisherArgs {
    /// omega or delta.
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub omega: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub delta: Vec<f64>,
    /// `lo:hi` or `lo:hi:points`; replaces --delta.
    #[arg(long, allow_hyphen_values = true)]
    pub delta_range: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub eta: Vec<f64>,
    /// `lo:hi` or `lo:hi:points`; replaces --eta.
    #[arg(long)]
    pub eta_range: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Central-difference step.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub mass_target: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BayesArgs {
    /// Click record (CSV or JSON).
    #[arg(long)]
    pub record: Option<PathBuf>,
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub candidates: Vec<f64>,
    /// `lo:hi:points`; replaces --candidates.
    #[arg(long, allow_hyphen_values = true)]
    pub candidate_range: Option<String>,
    /// waiting-time or stepped.
    #[arg(long)]
    pub mode: Option<String>,
    /// Bin width of the stepped mode.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Extra snapshot every this many bins in stepped mode (0 = clicks only).
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// wide or long.
    #[arg(long)]
    pub layout: Option<String>,
    /// Include the open interval after the last click (waiting-time mode).
    #[arg(long)]
    pub censor: Option<bool>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Click record (CSV or JSON).
    #[arg(long)]
    pub record: Option<PathBuf>,
    #[arg(long)]
    pub theta: Option<String>,
    /// Starting value; otherwise a grid fit to the first clicks.
    #[arg(long, allow_negative_numbers = true)]
    pub theta0: Option<f64>,
    #[arg(long)]
    pub initial_clicks: Option<usize>,
    /// `lo:hi:points` searched for the starting value.
    #[arg(long, allow_hyphen_values = true)]
    pub initial_range: Option<String>,
    /// `lo:hi:log`, `lo:hi:log:per_decade` or a comma list of click counts.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Also write the final gain function (tau, g) here.
    #[arg(long)]
    pub gain_output: Option<PathBuf>,
}
