//! `adoption`: command-line front end for the two-component adoption model.
//!
//! Every command prints one JSON document (sorted keys, ten significant
//! digits). Exit status is 0 on success, 2 for invalid input and 3 for
//! numerical failures.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "adoption", version, about = "Two-component adoption curves: fitting, phase analysis, CRLBs, tests and threshold economics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one family to a series; two-component fits add phase and a delta-method t* interval.
    Fit(FitArgs),
    /// Classify the phase of given parameters and report t* with its sensitivities.
    Phase(PhaseArgs),
    /// Fisher information and CRLBs for (alpha, beta) under an error model.
    Crlb(CrlbArgs),
    /// Residual diagnostics, constrained LR, shape test and Vuong tests on a series.
    Test(TestArgs),
    /// Fit all six families and tabulate AIC, RMSE, DW and BP p.
    Compare(CompareArgs),
    /// Agency threshold R* with delta-method and robust bounds.
    Threshold(ThresholdArgs),
    /// Simulate one series and write it as CSV.
    Simulate(SimulateArgs),
    /// Run the coverage, type-I error and power benchmark.
    Benchmark(BenchmarkArgs),
    /// Reliability pilot simulation.
    Pilot(PilotArgs),
    /// Slope of growth rate on embedding across cohorts.
    Gradient(GradientArgs),
}

#[derive(Args, Clone)]
struct DataArgs {
    /// CSV path, or `builtin:synthetic21` / `builtin:enterprise78`.
    #[arg(long)]
    data: String,
    /// Time column of the CSV.
    #[arg(long, default_value = "t")]
    t_col: String,
    /// Value column of the CSV.
    #[arg(long, default_value = "y")]
    y_col: String,
    /// Optional day-of-week column (0 = Monday .. 6 = Sunday).
    #[arg(long)]
    dow_col: Option<String>,
}

#[derive(Args, Clone, Copy)]
struct ThetaArgs {
    /// Initial novelty level N0.
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    n0: f64,
    /// Novelty decay rate.
    #[arg(long, default_value_t = 0.8, allow_negative_numbers = true)]
    alpha: f64,
    /// Embedded ceiling U_max.
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    umax: f64,
    /// Embedding growth rate.
    #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
    beta: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ErrorKind {
    Gaussian,
    Ar1,
    Poisson,
    Binomial,
}

#[derive(Args, Clone)]
struct NoiseArgs {
    /// Observation model.
    #[arg(long, value_enum, default_value = "gaussian")]
    error_model: ErrorKind,
    /// Gaussian marginal standard deviation.
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    /// AR(1) coefficient.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    rho: f64,
    /// Poisson exposure: counts have mean kappa A(t).
    #[arg(long, default_value_t = 100.0)]
    kappa: f64,
    /// Binomial scale: success probability A(t) / M.
    #[arg(long, default_value_t = 5.0)]
    m: f64,
    /// Binomial trials per design point (one value, or one per point).
    #[arg(long, value_delimiter = ',', default_value = "100")]
    trials: Vec<u32>,
}

#[derive(Args, Clone)]
struct DesignArgs {
    /// Explicit design times (comma-separated); overrides --n-points/--horizon.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    times: Option<Vec<f64>>,
    /// Number of equispaced points on [0, horizon].
    #[arg(long, default_value_t = 41)]
    n_points: usize,
    #[arg(long, default_value_t = 20.0)]
    horizon: f64,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// twocomp, logistic, bass, bilogistic, doubleexp or logisticbump.
    #[arg(long, default_value = "twocomp")]
    family: String,
    /// Confidence level for t* intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Also invert the profile likelihood for t*.
    #[arg(long)]
    profile: bool,
    /// Write observed and fitted curves as tidy CSV.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Write the JSON here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PhaseArgs {
    #[command(flatten)]
    theta: ThetaArgs,
    /// Write N(t), U(t) and A(t) on [0, horizon] as tidy CSV.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Horizon of the plot grid.
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CrlbArgs {
    #[command(flatten)]
    theta: ThetaArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    design: DesignArgs,
    /// Second design to compare against (comma-separated times).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    compare_times: Option<Vec<f64>>,
    /// Monte-Carlo replicates for an empirical check of the bound (>= 100).
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, default_value_t = 20240917)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Bootstrap resamples for the shape test.
    #[arg(long, default_value_t = 999)]
    n_boot: usize,
    #[arg(long, default_value_t = 20240917)]
    seed: u64,
    /// Intervention time for the pre/post growth-rate change.
    #[arg(long)]
    intervention: Option<f64>,
    /// Minimum window length in days for the pre/post analysis.
    #[arg(long, default_value_t = 10)]
    window: u32,
    /// Block-bootstrap resamples for the pre/post analysis.
    #[arg(long, default_value_t = 1000)]
    resamples: usize,
    /// Block length; defaults to ceil(n^(1/3)).
    #[arg(long)]
    block_len: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write all fitted curves as tidy CSV.
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Chat-mode reliability.
    #[arg(long)]
    r_chat: f64,
    /// Time saved per task by the agent.
    #[arg(long, allow_negative_numbers = true)]
    delta_tau: f64,
    /// Friction saved per task by the agent.
    #[arg(long, allow_negative_numbers = true)]
    delta_phi: f64,
    #[arg(long, default_value_t = 1.0)]
    c_time: f64,
    #[arg(long, default_value_t = 1.0)]
    c_fric: f64,
    /// Mean failure cost; required unless --tasks is given.
    #[arg(long)]
    mu_c: Option<f64>,
    /// Task economy CSV (columns v, c_f, tau, phi, w); mu_c becomes its weighted mean c_f.
    #[arg(long)]
    tasks: Option<PathBuf>,
    /// Standard error of mu_c.
    #[arg(long, default_value_t = 0.0)]
    sigma_mu: f64,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Upper bound on C_f for the Hoeffding floor (needs --n-samples).
    #[arg(long)]
    c_max: Option<f64>,
    /// Sample size behind mu_c for the Hoeffding floor.
    #[arg(long)]
    n_samples: Option<usize>,
    /// Uniform C_f law `low,high` for the preference probability (needs --gap).
    #[arg(long, value_delimiter = ',')]
    cf_uniform: Option<Vec<f64>>,
    /// Log-normal C_f law `mu,sigma` of ln C_f (needs --gap).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    cf_lognormal: Option<Vec<f64>>,
    /// Reliability gap R_agent - R_chat.
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    theta: ThetaArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 21)]
    n_points: usize,
    #[arg(long, default_value_t = 20.0)]
    horizon: f64,
    #[arg(long, default_value_t = 20240917)]
    seed: u64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Grid file of `key = value` lines (alpha, beta, umax, depths, sigmas,
    /// rhos, n_points, horizon, replicates, seed, level, shape_boot).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the replicate count of the grid.
    #[arg(long)]
    replicates: Option<usize>,
    /// Override the seed of the grid.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write one CSV row per scenario.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PilotArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    n_tasks: usize,
    #[arg(long, default_value_t = 0.3)]
    delta_tau: f64,
    #[arg(long, default_value_t = 0.1)]
    delta_phi: f64,
    #[arg(long, default_value_t = 1.0)]
    c_time: f64,
    #[arg(long, default_value_t = 1.0)]
    c_fric: f64,
    /// Beta shape pair for chat success probabilities.
    #[arg(long, value_delimiter = ',', default_value = "6,4")]
    beta_chat: Vec<f64>,
    /// Beta shape pair for agent success probabilities.
    #[arg(long, value_delimiter = ',', default_value = "8,2")]
    beta_agent: Vec<f64>,
    /// Uniform failure-cost bounds `low,high`.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1.5")]
    cf: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradientArgs {
    /// CSV with columns e, beta_hat, se; or `builtin:cohorts`.
    #[arg(long, default_value = "builtin:cohorts")]
    data: String,
    /// Weight cohorts by 1 / se^2.
    #[arg(long)]
    weighted: bool,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Phase(a) => commands::phase(a),
        Command::Crlb(a) => commands::crlb(a),
        Command::Test(a) => commands::test(a),
        Command::Compare(a) => commands::compare(a),
        Command::Threshold(a) => commands::threshold(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Benchmark(a) => commands::benchmark(a),
        Command::Pilot(a) => commands::pilot(a),
        Command::Gradient(a) => commands::gradient(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
