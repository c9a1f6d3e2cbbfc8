//! `vcometa`: sample the VCO oracle, fit metamodels, simulate and compare
//! PLL views, optimize sizing and tabulate flow costs.

mod manifest;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use run::Failure;

#[derive(Debug, Parser)]
#[command(name = "vcometa", version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Root seed; every random consumer derives a named sub-stream from it.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// JSON config: oracle parameters for `sample`, the PLL scenario for
    /// `simulate`/`compare`, the sizing problem for `optimize`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving artifacts and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Override the oracle's extraction work factor.
    #[arg(long, global = true)]
    pub work_factor: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw an LHS plan and evaluate it against the oracle.
    Sample {
        #[arg(short = 'n', long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// `lo:hi` per variable (W_P, W_N, V_C), comma separated, SI units.
        #[arg(long)]
        ranges: Option<String>,
        #[arg(long, default_value = "samples.csv")]
        out: String,
    },
    /// Fit a polynomial metamodel to a sample CSV.
    Fit {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, default_value_t = 2)]
        degree: u32,
        /// Held-out sample CSV for out-of-sample RMSE and R².
        #[arg(long)]
        holdout: Option<PathBuf>,
        #[arg(long, default_value = "metamodel.csv")]
        out: String,
        /// Also emit a Verilog-AMS module to this file name.
        #[arg(long)]
        vams: Option<String>,
        #[arg(long, default_value = "vco_metamodel")]
        module_name: String,
        #[arg(long)]
        ranges: Option<String>,
    },
    /// Run one PLL transient.
    Simulate {
        #[arg(long, default_value = "metamodel")]
        view: String,
        #[command(flatten)]
        views: ViewArgs,
        #[arg(long = "trace-out", alias = "trace", default_value = "trace.csv")]
        trace: String,
    },
    /// Run the same scenario under several VCO views.
    Compare {
        #[arg(long, default_value = "oracle,linear,metamodel", value_delimiter = ',')]
        views: Vec<String>,
        #[command(flatten)]
        view_args: ViewArgs,
    },
    /// Minimize locked PLL power over (W_P, W_N) by differential evolution.
    Optimize {
        #[arg(long, default_value = "metamodel")]
        view: String,
        #[command(flatten)]
        views: ViewArgs,
        /// Sizing problem as JSON; takes precedence over `--config`.
        #[arg(long)]
        problem: Option<PathBuf>,
        /// DE settings as JSON; its seed is replaced by the `de` sub-stream.
        #[arg(long)]
        de: Option<PathBuf>,
        /// Also run an exhaustive N x N grid for reference.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long = "history-out", alias = "history", default_value = "history.csv")]
        history: String,
    },
    /// Tabulate extraction-per-iteration versus metamodel flow run times.
    Cost {
        #[arg(long)]
        ni: u64,
        #[arg(long)]
        ns: u64,
        /// Extraction time per design (s).
        #[arg(long)]
        text: f64,
        /// Simulation time per iteration (s).
        #[arg(long)]
        tsim: f64,
        #[arg(long, default_value_t = 0.0)]
        tgen: f64,
        #[arg(long, default_value_t = 0.0)]
        tini: f64,
    },
}

/// How non-oracle views are built.
#[derive(Debug, Clone, Args)]
pub struct ViewArgs {
    /// Oracle parameters (JSON); defaults are used otherwise.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    /// Use this metamodel CSV instead of fitting one.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// LHS oracle samples for an on-the-fly metamodel.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match run::execute(&cli.global, &cli.cmd, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Fit(_) => 3,
            Failure::Sim(_) => 4,
        }
    }
}
