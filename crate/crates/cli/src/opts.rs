use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mdpconc::bounds::{BoundKind, TwoPolicyForm};
use mdpconc::sim::Reading;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "mdpconc", version, about = "Reward concentration bounds for finite MDPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a model file.
    Validate(Opts),
    /// Recurrent / unichain / communicating / weakly communicating flags.
    Classify(Opts),
    /// Solve the evaluation or optimality equations.
    Solve(Opts),
    /// Span, deviation, conditional spread and diameter of a policy.
    Stats(Opts),
    /// Evaluate closed-form bounds.
    Bounds(Opts),
    /// Simulate one trajectory and its martingale trace.
    Simulate(Opts),
    /// Run a Monte Carlo validation experiment.
    Verify(Opts),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Classify(_) => "classify",
            Command::Solve(_) => "solve",
            Command::Stats(_) => "stats",
            Command::Bounds(_) => "bounds",
            Command::Simulate(_) => "simulate",
            Command::Verify(_) => "verify",
        }
    }

    pub fn opts(&self) -> &Opts {
        match self {
            Command::Validate(o)
            | Command::Classify(o)
            | Command::Solve(o)
            | Command::Stats(o)
            | Command::Bounds(o)
            | Command::Simulate(o)
            | Command::Verify(o) => o,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Average,
    Discounted,
    FiniteHorizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadingArg {
    PerT,
    Uniform,
}

impl From<ReadingArg> for Reading {
    fn from(r: ReadingArg) -> Self {
        match r {
            ReadingArg::PerT => Reading::PerT,
            ReadingArg::Uniform => Reading::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormArg {
    Azuma,
    Lil,
}

impl From<FormArg> for TwoPolicyForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Azuma => TwoPolicyForm::Azuma,
            FormArg::Lil => TwoPolicyForm::Lil,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Coverage,
    Lln,
    Clt,
    Lil,
    Regret,
    Vanishing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Learner {
    Uniform,
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KScopeArg {
    All,
    Support,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Opts {
    /// Model file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// `optimal`, `greedy-fhdp`, `0,1,0` or per-stage `0,1;1,1;…`.
    #[arg(long, default_value = "optimal")]
    pub policy: String,
    /// Second policy for the two-policy kinds.
    #[arg(long)]
    pub policy2: Option<String>,
    /// Defaults to `finite-horizon` when a horizon is set, else `discounted`
    /// when a discount is set, else `average`.
    #[arg(long, value_enum)]
    pub criterion: Option<Criterion>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(short = 'T', long = "steps", default_value_t = 500)]
    pub t: usize,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated bound kinds.
    #[arg(long, value_delimiter = ',')]
    pub bound: Vec<BoundKind>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Policy enumeration cap for classification.
    #[arg(long, default_value_t = 1_000_000)]
    pub cap: u128,
    #[arg(long)]
    pub conservative_threshold: bool,
    #[arg(long, value_enum, default_value = "per-t")]
    pub reading: ReadingArg,
    #[arg(long, value_enum, default_value = "azuma")]
    pub two_policy_form: FormArg,
    #[arg(long, value_enum, default_value = "coverage")]
    pub experiment: Experiment,
    #[arg(long, value_enum, default_value = "uniform")]
    pub learner: Learner,
    #[arg(long, value_enum, default_value = "all")]
    pub k_scope: KScopeArg,
    /// Fixed initial state.
    #[arg(long, default_value_t = 0)]
    pub initial_state: usize,
    /// Discount grid for the vanishing-discount experiment.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.9, 0.99, 0.999])]
    pub gammas: Vec<f64>,
    /// Level `t` of the CLT stopping time.
    #[arg(long, default_value_t = 2000.0)]
    pub t_level: f64,
    /// Pass tolerance for the LLN experiment.
    #[arg(long, default_value_t = 0.02)]
    pub tolerance: f64,
}
