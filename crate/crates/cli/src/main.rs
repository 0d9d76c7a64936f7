//! `shapeopt` command-line front end.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "shapeopt", version, about = "Global shape optimization by TV regularization and graph cuts")]
struct Cli {
    /// Plain-text key=value file of default flags (command-line flags win).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Weighted-TV regularization of a field by the dual fixed point.
    Rof(RofArgs),
    /// Threshold a regularized field at one or more levels.
    Threshold(ThresholdArgs),
    /// Minimize the binary shape energy by max-flow.
    Cut(CutArgs),
    /// A-contrario detection on a regularized field.
    Detect(DetectArgs),
    /// Temporal median background and frame difference.
    Background(BackgroundArgs),
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum Intensity {
    /// PGM samples as stored.
    #[default]
    Raw,
    /// PGM samples divided by maxval.
    Normalized,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum Residue {
    #[default]
    Plain,
    PerPixel,
}

/// Where the weight field `g` comes from.
#[derive(Debug, Args)]
struct WeightArgs {
    /// Image whose gradient drives g = lambda / (1 + |grad I|^2) + mu.
    #[arg(long, value_name = "FILE", conflicts_with = "weights")]
    image: Option<PathBuf>,
    /// Weight field g read directly (PFM or PGM).
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Scale applied to PGM inputs.
    #[arg(long, value_enum, default_value_t = Intensity::Raw)]
    intensity: Intensity,
}

#[derive(Debug, Args)]
struct RofArgs {
    /// Field w0 to regularize (PFM or PGM).
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    #[command(flatten)]
    weights: WeightArgs,
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    #[arg(long, default_value_t = 0.002)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = Residue::Plain)]
    residue_norm: Residue,
    /// Solved field u (PFM).
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
    /// Dual fields as one PFM stacking xi_x, xi_y, eta_x, eta_y vertically.
    #[arg(long, value_name = "FILE")]
    duals_out: Option<PathBuf>,
    /// The weight field actually used (PFM).
    #[arg(long, value_name = "FILE")]
    weights_out: Option<PathBuf>,
    /// Per-iteration CSV: iteration,residue,energy.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Exit with status 3 if the tolerance is not reached.
    #[arg(long)]
    strict_convergence: bool,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    /// Regularized field u.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Threshold level; repeat for a sweep.
    #[arg(long, required = true, allow_negative_numbers = true)]
    alpha: Vec<f64>,
    /// Keep pixels with u > alpha (default).
    #[arg(long, conflicts_with = "non_strict")]
    strict: bool,
    /// Keep pixels with u >= alpha.
    #[arg(long)]
    non_strict: bool,
    /// Mask path; `{alpha}` is replaced by the level.
    #[arg(long, value_name = "PATTERN")]
    output_pattern: String,
    /// Data term f, for reporting shape energies.
    #[arg(long, value_name = "FILE", requires = "weights")]
    data: Option<PathBuf>,
    /// Weight field g, for reporting shape energies.
    #[arg(long, value_name = "FILE", requires = "data")]
    weights: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Intensity::Raw)]
    intensity: Intensity,
}

#[derive(Debug, Args)]
struct CutArgs {
    /// Data term f.
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    #[command(flatten)]
    weights: WeightArgs,
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    /// Solve with capacities rounded to multiples of 2^-bits.
    #[arg(long, value_name = "BITS")]
    quantize: Option<u32>,
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// Nonnegative field to run the detector on.
    #[arg(long, value_name = "FILE")]
    field: PathBuf,
    #[arg(long, default_value_t = 3)]
    radius: usize,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Map values by t / scale (clipped at 1) instead of t / max.
    #[arg(long, value_name = "SCALE")]
    psi_scale: Option<f64>,
    /// Regularized field whose closest level set is reported.
    #[arg(long = "match", value_name = "FILE")]
    match_field: Option<PathBuf>,
    /// Where to write the matched level set.
    #[arg(long, value_name = "FILE", requires = "match_field")]
    match_output: Option<PathBuf>,
    /// Eroded detection mask.
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = Intensity::Raw)]
    intensity: Intensity,
}

#[derive(Debug, Args)]
struct BackgroundArgs {
    #[arg(long, required = true, num_args = 1..)]
    frames: Vec<PathBuf>,
    /// Current frame I; enables the difference output.
    #[arg(long, value_name = "FILE")]
    current: Option<PathBuf>,
    /// Median background B.
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
    /// |B - I|, defaults to the output name with a `-diff` suffix.
    #[arg(long, value_name = "FILE", requires = "current")]
    diff_output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Intensity::Raw)]
    intensity: Intensity,
}

fn main() -> ExitCode {
    let args = match config::merge(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(commands::EXIT_IO);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(commands::EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
