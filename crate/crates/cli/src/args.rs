//! Command-line grammar.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "rts", version, about = "Robust two-sample Wald-type tests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a two-sample test on a dataset.
    Test(TestArgs),
    /// Asymptotic power: preset tables, contiguous or fixed alternatives, planning.
    Power(PowerArgs),
    /// Monte Carlo size/power and tuning study from a TOML config.
    Simulate(SimulateArgs),
    /// MDPDE of each sample.
    Estimate(EstimateArgs),
    /// Data-driven choice of β by the summed estimated MSE.
    SelectBeta(SelectArgs),
    /// Influence curves as CSV (x[,y],value).
    RobustCurve(CurveArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    NormalKnownSigma,
    Normal,
    Poisson,
    Exponential,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestArg {
    Simple,
    Partial,
    OneSided,
    Composite,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionArg {
    FirstLarger,
    SecondLarger,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetArg {
    Both,
    Sample1,
    Sample2,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Known standard deviation for normal-known-sigma.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct HypothesisArgs {
    #[arg(long = "test", value_enum, default_value = "simple")]
    pub test: TestArg,
    /// diff | mean-diff | var-ratio:C0
    #[arg(long)]
    pub psi: Option<String>,
    /// Which sample the one-sided alternative says is larger.
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DataArgs {
    /// Bundled name (adverse-events, platelet, lifetimes) or CSV path.
    #[arg(long)]
    pub data: String,
    /// Second one-column file; --data is then the first sample.
    #[arg(long)]
    pub data2: Option<String>,
    /// 1-based rows to remove, e.g. 1,2.
    #[arg(long, value_delimiter = ',')]
    pub drop_rows: Vec<usize>,
    #[arg(long, value_enum, default_value = "both")]
    pub drop_from: TargetArg,
    /// Values to append, e.g. 20.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub append: Vec<f64>,
    #[arg(long, value_enum, default_value = "sample2")]
    pub append_to: TargetArg,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OutputArgs {
    /// Write the JSON run record here ("-" for stdout instead of the table).
    #[arg(long)]
    pub json: Option<String>,
    /// Include a timestamp in the run record.
    #[arg(long)]
    pub timestamp: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TestArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub hypothesis: HypothesisArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Tuning parameter, or "auto".
    #[arg(long, default_value = "0")]
    pub beta: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Selection grid for --beta auto, min:max:step.
    #[arg(long, default_value = "0:1:0.05")]
    pub grid: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PowerArgs {
    /// Contiguous power of the two-sided normal-mean test, σ = 1.
    #[arg(long, conflicts_with = "table2")]
    pub table1: bool,
    /// Contiguous power of the one-sided normal-mean test, σ = 1.
    #[arg(long)]
    pub table2: bool,
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[command(flatten)]
    pub hypothesis: HypothesisArgs,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta1: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta2: Vec<f64>,
    /// Local drifts; switches to the contiguous alternative around θ₁ = θ₂.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub delta1: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub delta2: Vec<f64>,
    #[arg(long)]
    pub n: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub omega: f64,
    /// Target power; switches to sample-size planning.
    #[arg(long)]
    pub target: Option<f64>,
    /// Tuning parameter(s), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub beta: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Pooled-estimator limit: linear or mixture-fit.
    #[arg(long, default_value = "linear")]
    pub theta3: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Also write the cells as CSV.
    #[arg(long)]
    pub csv: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub beta: Vec<f64>,
    /// Report the data-based sandwich covariance instead of the model one.
    #[arg(long)]
    pub sandwich: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SelectArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "0:1:0.05")]
    pub grid: String,
    #[arg(long, default_value_t = 1.0)]
    pub pilot: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveArg {
    If1,
    If2,
    Pif,
    Lif,
    Ges,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternArg {
    S1,
    S2,
    Both,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CurveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub hypothesis: HypothesisArgs,
    #[arg(long, value_enum)]
    pub curve: CurveArg,
    #[arg(long, value_enum, default_value = "s1")]
    pub pattern: PatternArg,
    /// Common null parameter (or use --theta1/--theta2).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta0: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta1: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta2: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub delta1: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub delta2: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub omega: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Contamination points (β values for ges), min:max:step.
    #[arg(long, default_value = "-10:10:0.1", allow_hyphen_values = true)]
    pub grid: String,
    /// Second-sample points for --pattern both; defaults to --grid.
    #[arg(long, allow_hyphen_values = true)]
    pub ygrid: Option<String>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}
