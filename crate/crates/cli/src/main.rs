//! `decorr`: stable variable selection for correlated designs.
//!
//! Subcommands cover the pipeline stages (rank, decorrelate, select, trace),
//! the synthetic benchmark harness (simulate), and the consistency checks
//! (diagnose). Every run writes a `manifest.json` that is sufficient to
//! reproduce it; all randomness flows from `--seed`.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use decorr::orthonormalize::GsMode;
use decorr::pipeline::PipelineKind;

#[derive(Parser)]
#[command(name = "decorr", version, about = "Stable variable selection via screening, decorrelation, and stability selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GsModeArg {
    Classical,
    Modified,
}

impl From<GsModeArg> for GsMode {
    fn from(v: GsModeArg) -> Self {
        match v {
            GsModeArg::Classical => GsMode::Classical,
            GsModeArg::Modified => GsMode::Modified,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PipelineArg {
    Raw,
    Decorrelated,
    DecorrelatedNoOrdering,
}

impl From<PipelineArg> for PipelineKind {
    fn from(v: PipelineArg) -> Self {
        match v {
            PipelineArg::Raw => PipelineKind::Raw,
            PipelineArg::Decorrelated => PipelineKind::Decorrelated,
            PipelineArg::DecorrelatedNoOrdering => PipelineKind::DecorrelatedNoOrdering,
        }
    }
}

/// Flags shared by the commands that run the selection pipeline.
#[derive(Debug, Args)]
struct PipelineFlags {
    /// CSV file with a header row; all cells numeric.
    #[arg(long)]
    input: PathBuf,

    /// Name of the response column.
    #[arg(long)]
    response: String,

    /// Root seed for all randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Number of subsamples.
    #[arg(long = "B", default_value_t = decorr::stability::DEFAULT_SUBSAMPLES_REAL)]
    b: usize,

    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,

    /// Output directory.
    #[arg(long, default_value = "decorr-out")]
    out_dir: PathBuf,

    /// Number of grid penalties.
    #[arg(long, default_value_t = 100)]
    grid_count: usize,

    /// Smallest/largest penalty ratio (default: 1e-3 when p > n, else 1e-4).
    #[arg(long)]
    grid_ratio: Option<f64>,

    /// Decision threshold on selection frequencies.
    #[arg(long, default_value_t = 0.6)]
    pi_thr: f64,

    /// Variables the screening step keeps when adapting its penalty.
    #[arg(long, default_value_t = 10)]
    screen_threshold: usize,

    /// Gram-Schmidt variant.
    #[arg(long, value_enum, default_value_t = GsModeArg::Classical)]
    gs_mode: GsModeArg,

    /// Pipeline variant.
    #[arg(long, value_enum, default_value_t = PipelineArg::Decorrelated)]
    pipeline: PipelineArg,
}

#[derive(Subcommand)]
enum Command {
    /// Rank predictors by ridge-projection scores and emit the ordering.
    Rank {
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Reorder, orthonormalize, and dump the Q and R factors.
    Decorrelate {
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Run the full selection pipeline and report the stable variables.
    Select {
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Like select, but also emit the stability convergence trace.
    Trace {
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Run a synthetic benchmark scenario.
    Simulate {
        /// Built-in scenario name or path to a scenario JSON file.
        #[arg(long)]
        scenario: String,

        /// Pipeline variants to evaluate (repeatable).
        #[arg(long, value_enum, num_args = 1.., default_values_t = [PipelineArg::Raw, PipelineArg::Decorrelated])]
        pipeline: Vec<PipelineArg>,

        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,

        /// Override the scenario's subsample count.
        #[arg(long = "B")]
        b: Option<usize>,

        /// Override the scenario's replicate count.
        #[arg(long)]
        datasets: Option<usize>,

        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,

        #[arg(long, default_value = "decorr-out")]
        out_dir: PathBuf,

        #[arg(long, default_value_t = 100)]
        grid_count: usize,

        #[arg(long)]
        grid_ratio: Option<f64>,

        #[arg(long, value_enum, default_value_t = GsModeArg::Classical)]
        gs_mode: GsModeArg,

        #[arg(long, default_value_t = 10)]
        screen_threshold: usize,
    },
    /// Evaluate the irrepresentable condition on a design CSV.
    Diagnose {
        /// CSV file holding the design matrix (header row, all numeric).
        #[arg(long)]
        input: PathBuf,

        /// 1-based signal column indices, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        signal: Vec<usize>,

        /// Optional directory for report.json and manifest.json.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn init_jobs(jobs: Option<usize>) {
    if let Some(j) = jobs {
        // Ignore the error when a pool already exists (tests call this twice).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DECORR_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rank { flags } => {
            init_jobs(flags.jobs);
            commands::rank(&flags)
        }
        Command::Decorrelate { flags } => {
            init_jobs(flags.jobs);
            commands::decorrelate(&flags)
        }
        Command::Select { flags } => {
            init_jobs(flags.jobs);
            commands::select(&flags, false)
        }
        Command::Trace { flags } => {
            init_jobs(flags.jobs);
            commands::select(&flags, true)
        }
        Command::Simulate {
            scenario,
            pipeline,
            seed,
            b,
            datasets,
            jobs,
            out_dir,
            grid_count,
            grid_ratio,
            gs_mode,
            screen_threshold,
        } => {
            init_jobs(jobs);
            commands::simulate(commands::SimulateArgs {
                scenario,
                pipelines: pipeline.into_iter().map(PipelineKind::from).collect(),
                seed,
                b,
                datasets,
                jobs,
                out_dir,
                grid_count,
                grid_ratio,
                gs_mode: gs_mode.into(),
                screen_threshold,
            })
        }
        Command::Diagnose { input, signal, out_dir } => {
            commands::diagnose(&input, &signal, out_dir.as_deref())
        }
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
