use clap::{Args, Parser, Subcommand};
use gibbsgap::DEFAULT_ENUMERATION_CAP;

use crate::files::Selector;

/// Environment variable overriding the dataset enumeration cap.
pub const ENUM_CAP_ENV: &str = "GIBBSGAP_ENUM_CAP";

#[derive(Debug, Parser)]
#[command(
    name = "gibbsgap",
    version,
    about = "Worst-case measures, sensitivity decompositions and Gibbs generalization gaps on finite alphabets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find β whose tilt of the reference has the requested relative entropy.
    SolveBeta(SolveBetaArgs),
    /// Tilt the reference at a given β.
    Tilt(TiltArgs),
    /// Decompose the difference of expected losses (or empirical risks) of two measures.
    Decompose(DecomposeArgs),
    /// Decompose the generalization gap of one model on a dataset.
    Gap(GapArgs),
    /// Audit the doubly-expected gap of the Gibbs algorithm by exact enumeration.
    GibbsAudit(GibbsAuditArgs),
    /// Run the randomized identity suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Instance file (JSON).
    #[arg(long)]
    pub instance: String,
    /// Model label; optional when the instance has a single model.
    #[arg(long)]
    pub model: Option<String>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub output: Option<String>,
}

/// Temperature given directly or through a relative-entropy budget.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Temperature {
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Relative-entropy budget; β is solved on the reference.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolveBetaArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: f64,
    /// Measure to tilt.
    #[arg(long, default_value = "reference")]
    pub reference: Selector,
}

#[derive(Debug, Args)]
pub struct TiltArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: f64,
    #[arg(long, default_value = "reference")]
    pub reference: Selector,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub p1: Selector,
    #[arg(long)]
    pub p2: Selector,
    /// Reference; also accepts `aggregate` (two datasets) and `mix`.
    #[arg(long, default_value = "reference")]
    pub reference: Selector,
    #[command(flatten)]
    pub temperature: Temperature,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dataset file (JSON).
    #[arg(long)]
    pub dataset: String,
    /// Data-generating measure.
    #[arg(long, default_value = "data")]
    pub pz: Selector,
    /// Reference of the tilt; the data-generating measure when omitted.
    #[arg(long)]
    pub reference: Option<Selector>,
    #[command(flatten)]
    pub temperature: Temperature,
}

#[derive(Debug, Args)]
pub struct GibbsAuditArgs {
    #[arg(long)]
    pub instance: String,
    /// `uniform` or `weights:W1,W2,...` over the models.
    #[arg(long, default_value = "uniform")]
    pub prior: String,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Dataset length.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "data")]
    pub pz: Selector,
    #[arg(long, env = ENUM_CAP_ENV, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub enum_cap: u64,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Instance-spec file (JSON); flags override its fields.
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub min_alphabet: Option<usize>,
    #[arg(long)]
    pub max_alphabet: Option<usize>,
    #[arg(long)]
    pub min_models: Option<usize>,
    #[arg(long)]
    pub max_models: Option<usize>,
    #[arg(long)]
    pub loss_max: Option<f64>,
    #[arg(long)]
    pub beta_min: Option<f64>,
    #[arg(long)]
    pub beta_max: Option<f64>,
    #[arg(long)]
    pub max_dataset_len: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub output: Option<String>,
}

impl Command {
    pub fn output(&self) -> Option<&str> {
        match self {
            Command::SolveBeta(a) => a.common.output.as_deref(),
            Command::Tilt(a) => a.common.output.as_deref(),
            Command::Decompose(a) => a.common.output.as_deref(),
            Command::Gap(a) => a.common.output.as_deref(),
            Command::GibbsAudit(a) => a.output.as_deref(),
            Command::Verify(a) => a.output.as_deref(),
        }
    }
}
