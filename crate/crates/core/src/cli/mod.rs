//! The `invsets` command line.
//!
//! Exit codes: 0 when every check passes, 2 when a statistical null
//! hypothesis is rejected, 1 on any operational error.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::coupling::CouplingMode;
use crate::stats::GowersMode;

pub use commands::{compose_panel, Outcome};
pub use config::{parse_box, parse_window, Meta, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "invsets",
    version,
    about = "Affine-invariant random subsets of ℤ^d: sampling and statistics"
)]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every command that runs one process.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML or JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Preset name (s1, s2, s3, bernoulli:<p>, periodic:<n>, cutproject-s1) or a process file.
    #[arg(long)]
    pub spec: Option<String>,
    /// Sampling box: `80x80` or `lo:hi,lo:hi`.
    #[arg(long = "box")]
    pub bx: Option<String>,
    /// Lattice dimension for presets.
    #[arg(long)]
    pub d: Option<usize>,
    /// Base seed (default: config, then $INVSETS_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a CSV table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample one realization on a box.
    Sample {
        #[command(flatten)]
        common: Common,
        /// PBM (P4) raster of a 2-D slice.
        #[arg(long)]
        pbm: Option<PathBuf>,
        /// Raw bit-grid.
        #[arg(long)]
        raw: Option<PathBuf>,
        /// Slice axes for the raster, e.g. `0,1`.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        axes: Option<Vec<usize>>,
    },
    /// Side-by-side raster of several samples in shuffled order.
    FigurePanel {
        /// One per panel; repeat the flag.
        #[arg(long = "spec")]
        specs: Vec<String>,
        /// One shared box, or one per panel.
        #[arg(long = "box")]
        boxes: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Blank columns between panels.
        #[arg(long, default_value_t = 4)]
        gap: usize,
        /// Keep the given order.
        #[arg(long)]
        no_shuffle: bool,
    },
    /// Estimators and tests.
    #[command(subcommand)]
    Stats(StatsCmd),
    /// Coupled thinnings.
    #[command(subcommand)]
    Couple(CoupleCmd),
}

#[derive(Subcommand, Debug)]
pub enum StatsCmd {
    /// Box density over independent seeds.
    Intensity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seeds: Option<u64>,
        /// Reject (exit 2) if the mean is more than 4 standard errors away.
        #[arg(long)]
        expect: Option<f64>,
    },
    /// Probability that a realization contains a finite set of points.
    Marginal {
        #[command(flatten)]
        common: Common,
        /// JSON list of points, e.g. `[[0,0],[1,0]]`.
        #[arg(long)]
        points: Option<String>,
        #[arg(long)]
        trials: Option<u64>,
        /// Reject (exit 2) if outside the 95% Wilson interval.
        #[arg(long)]
        expect: Option<f64>,
    },
    /// Gowers U^k norm of sampled indicators.
    Gowers {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        order: Option<u32>,
        #[arg(long, value_enum)]
        mode: Option<GowersModeArg>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seeds: Option<u64>,
        /// Second process; exit 2 when the interquartile ranges separate.
        #[arg(long)]
        against: Option<String>,
    },
    /// Counts on random arithmetic progressions.
    Ap {
        #[command(flatten)]
        common: Common,
        #[arg(long = "L")]
        length: Option<u32>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        max_step: Option<u64>,
        /// Second process; exit 2 when the chi-square test rejects equality.
        #[arg(long)]
        against: Option<String>,
        /// Compare with Binomial(L, p) instead.
        #[arg(long)]
        expect: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Marginals at F versus g(F).
    Invariance {
        #[command(flatten)]
        common: Common,
        /// Affine preset name or JSON map.
        #[arg(long)]
        g: Option<String>,
        /// JSON list of queries, e.g. `[[[0,0]],[[0,0],[1,0]]]`.
        #[arg(long)]
        queries: Option<String>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
}

#[derive(Subcommand, Debug)]
pub enum CoupleCmd {
    /// Symmetric-difference density of coupled thinnings.
    Run {
        #[command(flatten)]
        common: Common,
        /// Window: `arc:<δ>`, `constant:<p>`, `box:a:b`, or JSON.
        #[arg(long)]
        f1: Option<String>,
        #[arg(long)]
        f2: Option<String>,
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<CouplingModeArg>,
        /// Also check the per-point conditional probabilities on a grid of 2^bits uniforms.
        #[arg(long)]
        exact_bits: Option<u32>,
        /// Exit 2 unless the density is within 4σ of ‖f1−f2‖₁ and at most ‖f1−f2‖₂.
        #[arg(long)]
        check: bool,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum GowersModeArg {
    Exact,
    MonteCarlo,
}

impl From<GowersModeArg> for GowersMode {
    fn from(m: GowersModeArg) -> Self {
        match m {
            GowersModeArg::Exact => GowersMode::Exact,
            GowersModeArg::MonteCarlo => GowersMode::MonteCarlo,
        }
    }
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum CouplingModeArg {
    Shared,
    TwoStep,
}

impl From<CouplingModeArg> for CouplingMode {
    fn from(m: CouplingModeArg) -> Self {
        match m {
            CouplingModeArg::Shared => CouplingMode::SharedUniform,
            CouplingModeArg::TwoStep => CouplingMode::TwoStep,
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| commands::dispatch(cli.command)),
            Err(e) => Err(crate::error::Error::InvalidArgument(e.to_string())),
        },
        None => commands::dispatch(cli.command),
    };
    match result {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::Reject) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
