//! `fermat`: generate synthetic data, estimate metrics, learn and prune graphs,
//! score forest densities and run replicated benchmarks.

mod commands;
mod failure;
mod formats;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fermat_core::{Distortion, Kernel, Learner, MetricMethod};

use crate::failure::{Failure, Kind};

#[derive(Debug, Parser)]
#[command(name = "fermat", version, about = "Greedy graph structure learning with Fermat-type metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample one replication: train.csv, heldout.csv, truth.edges, model.json.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Replication index; the sampling seed is `seed + replication`.
        #[arg(long, default_value_t = 0)]
        replication: usize,
    },
    /// Estimate the pairwise metric of a dataset: metric.csv.
    Metric {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        /// Discrete only: write the untransformed information distance (may contain inf).
        #[arg(long)]
        raw_distance: bool,
        #[arg(long, default_value = "metric.csv")]
        output: PathBuf,
    },
    /// Run MST or MTG on a metric file: graph.edges, plus learn.jsonl with --truth.
    Learn {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        metric: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value = "graph.edges")]
        output: PathBuf,
    },
    /// Choose the stream prefix by held-out likelihood: pruned.edges, forest.edges, prune.json.
    Prune {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        metric: PathBuf,
        #[arg(long)]
        heldout: PathBuf,
    },
    /// Fit a forest density and score held-out data: density.json.
    Density {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        heldout: PathBuf,
        #[arg(long)]
        forest: PathBuf,
        /// JSON with `mu` and `omega` for the Gaussian held-out score.
        #[arg(long)]
        precision: Option<PathBuf>,
    },
    /// Replicated end-to-end experiment: records.jsonl, summary.csv, curve.csv, config.json.
    Bench {
        #[command(flatten)]
        common: Common,
        /// JSON with `mu` and `omega` scored on every replication's held-out split.
        #[arg(long)]
        precision: Option<PathBuf>,
    },
}

/// Output directory and configuration flags shared by every subcommand.
/// Relative input paths are resolved against `--out`.
#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    out: PathBuf,
    /// Experiment configuration as a JSON document; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Graph pattern as JSON, e.g. '{"kind":"chain","d":6}'.
    #[arg(long)]
    pattern: Option<String>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_heldout: Option<usize>,
    #[arg(long, value_enum)]
    distortion: Option<DistortionArg>,
    #[arg(long)]
    box_cox_nu: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_enum)]
    learner: Option<LearnerArg>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long, value_parser = parse_kernel)]
    kernel: Option<Kernel>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    c0: Option<f64>,
    /// Fixed copula bandwidth in place of the `c0` rule.
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    kappa1: Option<f64>,
    #[arg(long)]
    kappa2: Option<f64>,
    #[arg(long)]
    plugin_bandwidth: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    entropy_bandwidth: Option<f64>,
}

fn parse_kernel(s: &str) -> Result<Kernel, fermat_core::Error> {
    s.parse()
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DistortionArg {
    None,
    Boxcox,
    Nonparanormal,
}

impl From<DistortionArg> for Distortion {
    fn from(d: DistortionArg) -> Distortion {
        match d {
            DistortionArg::None => Distortion::None,
            DistortionArg::Boxcox => Distortion::BoxCox,
            DistortionArg::Nonparanormal => Distortion::Nonparanormal,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Discrete,
    CopulaMi,
    PluginMi,
}

impl From<MethodArg> for MetricMethod {
    fn from(m: MethodArg) -> MetricMethod {
        match m {
            MethodArg::Discrete => MetricMethod::Discrete,
            MethodArg::CopulaMi => MetricMethod::CopulaMi,
            MethodArg::PluginMi => MetricMethod::PluginMi,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LearnerArg {
    Mst,
    Mtg,
}

impl From<LearnerArg> for Learner {
    fn from(l: LearnerArg) -> Learner {
        match l {
            LearnerArg::Mst => Learner::Mst,
            LearnerArg::Mtg => Learner::Mtg,
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate { common, replication } => commands::generate(&common, replication),
        Command::Metric {
            common,
            data,
            raw_distance,
            output,
        } => commands::metric(&common, &data, raw_distance, &output),
        Command::Learn {
            common,
            metric,
            truth,
            output,
        } => commands::learn(&common, &metric, truth.as_deref(), &output),
        Command::Prune { common, metric, heldout } => commands::prune(&common, &metric, &heldout),
        Command::Density {
            common,
            train,
            heldout,
            forest,
            precision,
        } => commands::density(&common, &train, &heldout, &forest, precision.as_deref()),
        Command::Bench { common, precision } => commands::bench(&common, precision.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let failure = Failure::new(Kind::Usage, e.render().to_string().trim_end());
            eprintln!("{}", failure.to_json());
            return ExitCode::from(failure.exit_code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.to_json());
            ExitCode::from(failure.exit_code())
        }
    }
}
