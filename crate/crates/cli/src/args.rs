use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Canonical tail levels `P(ξ > x)` of the default x-grid.
pub const DEFAULT_LEVELS: [f64; 6] = [1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9];

#[derive(Debug, Parser)]
#[command(
    name = "walkmax",
    version,
    about = "Tail asymptotics of random-walk maxima: oracles, simulation, reports"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Numerical class-membership diagnostics for an increment law.
    VerifyClass(VerifyClassArgs),
    /// Asymptotic constants of the all-time maximum.
    Constants(ConstantsArgs),
    /// P(M > x)/P(ξ > x) against the constant C.
    TailReport(TailReportArgs),
    /// P(M ∈ (x, x+t])/P(ξ > x) against C(1 − e^{-γt}).
    LocalReport(LocalReportArgs),
    /// P(M_N > x)/P(ξ > x) against the finite-horizon constant.
    Finite(FiniteArgs),
    /// Maximum stopped at the first descending epoch.
    Stopped(StoppedArgs),
    /// Single-big-jump conditional ratio.
    Bigjump(BigjumpArgs),
    /// Renewal-line crossing diagnostics.
    RenewalDiag(RenewalArgs),
    /// Tails of convolution powers against n·φ̂^{n−1}.
    ConvolutionCheck(ConvolutionArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyClass(_) => "verify-class",
            Command::Constants(_) => "constants",
            Command::TailReport(_) => "tail-report",
            Command::LocalReport(_) => "local-report",
            Command::Finite(_) => "finite",
            Command::Stopped(_) => "stopped",
            Command::Bigjump(_) => "bigjump",
            Command::RenewalDiag(_) => "renewal-diag",
            Command::ConvolutionCheck(_) => "convolution-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Measured {
    Oracle,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HArg {
    Quarter,
    Sqrt,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Increment law, e.g. `polyexp:gamma=1,beta=2,shift=1.386`.
    #[arg(long)]
    pub model: String,
}

#[derive(Debug, Args, Serialize)]
pub struct GridArgs {
    /// Lattice step h (default: 0.01 for continuous laws, the atom lattice otherwise).
    #[arg(long)]
    pub step: Option<f64>,
    /// Sup-norm tolerance of the fixed-point iteration.
    #[arg(long, default_value_t = 1e-13)]
    pub fixed_point_tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SimArgs {
    #[arg(long, default_value_t = 100_000)]
    pub n_paths: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads. Results do not depend on it, so it is left out of
    /// the manifest.
    #[arg(long, default_value_t = 1)]
    #[serde(skip)]
    pub shards: usize,
    /// Step cap per simulated path.
    #[arg(long, default_value_t = 1_000_000)]
    pub horizon_cap: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct OutputArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Record wall time in the JSON report (breaks byte-identical reruns).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyClassArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Shifts k of the ratio P(ξ > x − k)/P(ξ > x).
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 5.0])]
    pub k: Vec<f64>,
    /// Points of the ratio diagnostic.
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 100.0, 1000.0, 10000.0])]
    pub x: Vec<f64>,
    /// Points of the convolution-integral diagnostic.
    #[arg(long, value_delimiter = ',', default_values_t = [20.0, 40.0, 80.0])]
    pub sx: Vec<f64>,
    #[arg(long, value_enum, default_value_t = HArg::Quarter)]
    pub h: HArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ConstantsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Twist exponent for laws outside the class (lattice families).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct TailReportArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Evaluation points (default: where P(ξ > x) = 1e-4 … 1e-9).
    #[arg(long, value_delimiter = ',')]
    pub x: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Measured::Oracle)]
    pub measured: Measured,
    /// Tolerance on the final deviation.
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    /// Also run the oracle at half the step and report the largest ratio change.
    #[arg(long)]
    pub refine: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct LocalReportArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',')]
    pub x: Vec<f64>,
    /// Window length t.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct FiniteArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Horizons N.
    #[arg(long = "N", value_delimiter = ',', default_values_t = [5usize, 20, 50])]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub x: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Measured::Oracle)]
    pub measured: Measured,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct StoppedArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',')]
    pub x: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Measured::Oracle)]
    pub measured: Measured,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    /// Step budget of the killed recursion.
    #[arg(long, default_value_t = 100_000)]
    pub horizon: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BigjumpArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',')]
    pub x: Vec<f64>,
    /// Cut-off h(x): x/4 or √x.
    #[arg(long, value_enum, default_value_t = HArg::Quarter)]
    pub h: HArg,
    #[arg(long, value_enum, default_value_t = Measured::Oracle)]
    pub measured: Measured,
    /// Required conditional ratio at the largest x.
    #[arg(long, default_value_t = 0.9)]
    pub threshold: f64,
    /// Per-path CSV trace of the simulated big-jump events (mc only).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct RenewalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Line offsets R.
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 4.0, 8.0, 16.0])]
    pub r: Vec<f64>,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvolutionArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Convolution powers.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3])]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub x: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    /// Use the FFT backend instead of direct summation.
    #[arg(long)]
    pub fft: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}
