use std::path::PathBuf;

use aptx_core::nn::{Batch, DatasetName, Loss};
use aptx_core::perf::{Mode, Precision};
use aptx_core::{ActivationSpec, Kind};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "aptx",
    version,
    about = "Activation kernels: evaluate, verify, compare, benchmark, train"
)]
pub struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, env = "APTX_OUT_DIR", default_value = "aptx-out")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print f(x) and f'(x) with 17 significant digits.
    Eval(EvalArgs),
    /// Write the six figure data series as CSV.
    Figures(FiguresArgs),
    /// Run the self-check suite; exits 2 if any check fails.
    Verify(VerifyArgs),
    /// Error metrics between two activations over a grid.
    Compare(CompareArgs),
    /// Minimum of an activation on an interval.
    Min(MinArgs),
    /// Static per-element operation counts.
    Cost(CostArgs),
    /// Elementwise throughput benchmark.
    Bench(BenchArgs),
    /// Train a small MLP on a synthetic dataset.
    Train(TrainArgs),
}

/// An activation given as `--kind` plus optional parameter flags.
///
/// `--kind` also accepts the full `kind:key=value,...` form.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SpecArgs {
    #[arg(long, default_value = "aptx")]
    pub kind: String,
    /// APTx alpha, ELU alpha, or leaky ReLU slope.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// APTx beta.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// APTx gamma.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// SWISH rho.
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
}

impl SpecArgs {
    pub fn spec(&self) -> aptx_core::Result<ActivationSpec> {
        let mut text = self.kind.clone();
        let flags = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("rho", self.rho),
        ];
        let mut sep = if text.contains(':') { ',' } else { ':' };
        for (key, value) in flags {
            if let Some(v) = value {
                text.push(sep);
                text.push_str(&format!("{key}={v:?}"));
                sep = ',';
            }
        }
        text.parse()
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// One or more points.
    #[arg(long, required = true, num_args = 1.., allow_negative_numbers = true)]
    pub x: Vec<f64>,
    /// Print JSON instead of CSV.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct FiguresArgs {
    /// Only these figures, e.g. `--only fig3 --only fig6`.
    #[arg(long)]
    pub only: Vec<String>,
    /// Grid spacing for every figure.
    #[arg(long, default_value_t = aptx_core::figures::DEFAULT_STEP)]
    pub step: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Run only checks whose name starts with this prefix.
    #[arg(long)]
    pub filter: Option<String>,
    /// Corrupt this kind's derivative before running, to confirm the suite notices.
    #[arg(long)]
    pub mutate: Option<Kind>,
    /// Amount added to the mutated derivative.
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    pub offset: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    /// First activation (`kind` or `kind:key=value,...`; `aptx_piecewise` for the split approximant).
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub hi: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Compare derivatives instead of values.
    #[arg(long)]
    pub grads: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct MinArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub hi: f64,
    #[arg(long, default_value_t = aptx_core::calculus::DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CostArgs {
    /// Activations to count (`kind` or `kind:key=value,...`); every kind by default.
    #[arg(long)]
    pub kind: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Forward,
    Derivative,
    Fused,
    All,
}

impl ModeArg {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeArg::Forward => vec![Mode::Forward],
            ModeArg::Derivative => vec![Mode::Derivative],
            ModeArg::Fused => vec![Mode::Fused],
            ModeArg::All => Mode::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionArg {
    F32,
    F64,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::F32 => Precision::F32,
            PrecisionArg::F64 => Precision::F64,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    /// Activations to measure; every kind by default. MISH is always measured as the reference.
    #[arg(long)]
    pub kind: Vec<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::All)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 10_000_000)]
    pub len: usize,
    #[arg(long, default_value_t = aptx_core::perf::bench::MIN_REPS)]
    pub reps: usize,
    #[arg(long, default_value_t = aptx_core::perf::bench::MIN_WARMUP)]
    pub warmup: usize,
    #[arg(long, value_enum, default_value_t = PrecisionArg::F32)]
    pub precision: PrecisionArg,
    #[arg(long, default_value_t = 0x5EED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long, default_value = "xor")]
    pub dataset: DatasetName,
    /// `kind` or `kind:key=value,...`.
    #[arg(long, default_value = "aptx")]
    pub activation: String,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "8")]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lr: f64,
    /// `full` or a batch size.
    #[arg(long, default_value = "full")]
    pub batch: Batch,
    /// `mse` or `cross_entropy`; defaults to cross-entropy for classification and MSE otherwise.
    #[arg(long)]
    pub loss: Option<Loss>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
}
