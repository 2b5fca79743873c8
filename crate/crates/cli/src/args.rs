//! Command-line grammar.
//!
//! Every subcommand struct is also the serialized run configuration: the
//! manifest echoes it, and `--config` accepts the same document back.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "conekit", version, about = "Affine processes on symmetric cones")]
pub struct Cli {
    /// JSON document of flag values (`{"command": ..., "<flag>": ...}`);
    /// flags given on the command line override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Check admissibility of a parameter set.
    Validate(ValidateArgs),
    /// Solve the Riccati equations on a time grid.
    Riccati(RiccatiArgs),
    /// Laplace transform of a Wishart law.
    Laplace(LawArgs),
    /// Central or noncentral Wishart density.
    Density(DensityArgs),
    /// Draw samples of a Wishart law.
    Sample(SampleArgs),
    /// Simulate paths of an affine process.
    Simulate(SimulateArgs),
    /// Paths of the polyhedral or dual-Vinberg example.
    Examples(ExamplesArgs),
    /// Run the acceptance checks and print a pass/fail table.
    Selftest(SelftestArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Riccati(_) => "riccati",
            Command::Laplace(_) => "laplace",
            Command::Density(_) => "density",
            Command::Sample(_) => "sample",
            Command::Simulate(_) => "simulate",
            Command::Examples(_) => "examples",
            Command::Selftest(_) => "selftest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct OutputArgs {
    /// Output file (stdout when absent); the manifest goes to `<out>.manifest.json`.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct ValidateArgs {
    /// Parameter-set document (JSON).
    #[arg(long, value_name = "PATH")]
    pub params: PathBuf,
    /// Random boundary pairs for the sampled checks.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowMethodArg {
    Numeric,
    Closed,
    Split,
    /// Numeric and closed side by side, with their maximum difference.
    Both,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct RiccatiArgs {
    #[arg(long, value_name = "PATH")]
    pub params: PathBuf,
    /// Initial value: identity | zero | file:<path> | coords:[...]
    #[arg(long, default_value = "identity")]
    pub u: String,
    /// Final time.
    #[arg(long)]
    pub t: f64,
    /// Number of grid points on [0, t].
    #[arg(long, default_value_t = 21)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "numeric")]
    pub method: FlowMethodArg,
    /// Steps of the splitting scheme per grid point.
    #[arg(long, default_value_t = 64)]
    pub split_steps: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct LawSpec {
    /// Algebra as kind:size (sym, herm, spin).
    #[arg(long, default_value = "sym:1")]
    pub algebra: String,
    /// Shape parameter δ.
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value = "identity")]
    pub alpha: String,
    #[arg(long)]
    pub t: f64,
    /// Starting point (noncentrality).
    #[arg(long, default_value = "zero")]
    pub x: String,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct LawArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub law: LawSpec,
    /// Transform argument.
    #[arg(long)]
    pub u: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZonalArg {
    Auto,
    Recursive,
    MonteCarlo,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct DensityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub law: LawSpec,
    /// Evaluation point.
    #[arg(long)]
    pub xi: String,
    /// Largest series degree.
    #[arg(long, default_value_t = 40)]
    pub cap: usize,
    /// Target bound on the truncated series tail.
    #[arg(long, default_value_t = 1e-8)]
    pub tail_tol: f64,
    #[arg(long, value_enum, default_value = "auto")]
    pub zonal: ZonalArg,
    /// Samples per zonal polynomial in Monte Carlo mode.
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub law: LawSpec,
    /// Number of samples.
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Euler steps used when the law has no exact sampler.
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    /// Euler, plus jumps when the parameter set has jump atoms.
    Auto,
    Euler,
    Jumps,
    /// Chained exact Wishart transitions (Bru parameter sets only).
    Exact,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    #[arg(long, value_name = "PATH")]
    pub params: PathBuf,
    /// Initial state.
    #[arg(long, default_value = "identity")]
    pub x: String,
    /// Horizon.
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "auto")]
    pub scheme: SchemeArg,
    /// Stored grid points: all | final | stride:<k>
    #[arg(long, default_value = "all")]
    pub record: String,
    /// Transform argument for the summary (Monte Carlo vs Riccati at the horizon).
    #[arg(long)]
    pub u: Option<String>,
    /// Threshold for the boundary statistics.
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExampleKind {
    Polyhedral,
    Vinberg,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct ExamplesArgs {
    #[arg(value_enum)]
    pub kind: ExampleKind,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "all")]
    pub record: String,
    /// Polyhedral: Brownian starting point y₀ ∈ ℝ⁴.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [1.0, 1.0, 1.0, 1.0])]
    pub y0: Vec<f64>,
    /// Vinberg: squared-Bessel parameter of the scalar block.
    #[arg(long, default_value_t = 3.0)]
    pub b: f64,
    /// Vinberg: initial scalar block.
    #[arg(long, default_value_t = 1.0)]
    pub a0: f64,
    /// Vinberg: first rank-one block vector.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [1.0, 0.5])]
    pub z1: Vec<f64>,
    /// Vinberg: second rank-one block vector.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [-0.5, 1.0])]
    pub z2: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct SelftestArgs {
    /// Run only these criteria (comma-separated ids).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<usize>,
    /// Write the outcomes as JSON to this file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}
