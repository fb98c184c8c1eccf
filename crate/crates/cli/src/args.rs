use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "muxdt",
    version,
    about = "Deadtime fraction of multiplexed photon-counting detector arrays"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// DTF versus rate (CW) or per-pulse probability (pulsed) over a grid.
    #[command(args_override_self = true)]
    DtfCurve(CurveArgs),
    /// Incident rate at which the DTF reaches a target.
    #[command(args_override_self = true)]
    RateAtDtf(RateArgs),
    /// Dataset behind one of the reference figures.
    #[command(args_override_self = true)]
    Figure(FigureArgs),
    /// Geometric/binomial identity and normalization self-check.
    #[command(args_override_self = true)]
    DistCheck(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Cw,
    Pulsed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Analytic,
    Montecarlo,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Multiplexed,
    Tree,
    Reduced,
    Single,
}

/// Output and Monte Carlo settings shared by every computing subcommand.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Flat key = value file mirroring flag names; flags override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "analytic")]
    pub engine: EngineArg,

    /// Photons (CW) or pulses (pulsed) per Monte Carlo point.
    #[arg(long, default_value_t = 1_000_000)]
    pub n_events: u64,

    #[arg(long, default_value_t = 10)]
    pub batches: u64,

    /// Defaults to $MUXDT_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Worker threads for grid points (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,

    /// Emit a JSON records array instead of CSV.
    #[arg(long)]
    pub json: bool,

    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

/// Source and detector configuration.
#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    #[arg(long, value_enum, default_value = "cw")]
    pub mode: ModeArg,

    #[arg(long, value_enum, default_value = "multiplexed")]
    pub family: FamilyArg,

    /// Detector count (or deadtime reduction factor for `reduced`).
    #[arg(long, default_value_t = 1)]
    pub n: usize,

    /// Per-detector deadtime in seconds.
    #[arg(long, default_value_t = 50e-9)]
    pub deadtime: f64,

    /// Comma-separated per-detector deadtimes for a heterogeneous pool
    /// (Monte Carlo, multiplexed family only).
    #[arg(long, value_name = "LIST")]
    pub deadtimes: Option<String>,

    /// Pulse repetition rate in Hz (pulsed mode).
    #[arg(long)]
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub system: SystemArgs,

    /// `log:START:STOP:POINTS` or `lin:START:STOP:POINTS`.
    #[arg(long)]
    pub grid: String,

    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub system: SystemArgs,

    #[arg(long, default_value_t = 0.1)]
    pub target: f64,

    /// Search bracket `LO:HI` (photons/s for CW, p for pulsed).
    #[arg(long)]
    pub bracket: Option<String>,

    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    /// fig3a, fig3b, fig5a, fig5b, fig6a or fig6b.
    pub name: String,

    #[arg(long, default_value_t = 0.1)]
    pub target: f64,

    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub json: bool,

    /// Perturbs one residual so the check must fail.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}
