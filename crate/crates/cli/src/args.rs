use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "freebdy", version, about = "Free-boundary curve shortening and min-max geodesics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tighten a scenario sweepout and report its width and geodesic.
    Minmax(MinmaxArgs),
    /// Iterate the shortening map on a single curve.
    Tighten(TightenArgs),
    /// Run the inequality and property suites.
    Validate(ValidateArgs),
    /// Write a scenario sweepout or a curve in another format.
    Export(ExportArgs),
}

/// Flags shared by every subcommand; any of them may come from `--config`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Common {
    /// Built-in scenario name or a path to a scenario descriptor JSON.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub slices: Option<usize>,
    /// Break-grid size L (the grid has 2L + 1 points).
    #[arg(long = "L", id = "L")]
    #[serde(rename = "L")]
    pub l: Option<usize>,
    /// Curve samples per even interval; curves carry L times this many segments.
    #[arg(long)]
    pub samples_per_segment: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file supplying defaults for any flag; explicit flags win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Common {
    /// Fills unset fields from `other`.
    pub fn or(self, other: Common) -> Common {
        Common {
            scenario: self.scenario.or(other.scenario),
            slices: self.slices.or(other.slices),
            l: self.l.or(other.l),
            samples_per_segment: self.samples_per_segment.or(other.samples_per_segment),
            iters: self.iters.or(other.iters),
            tol: self.tol.or(other.tol),
            seed: self.seed.or(other.seed),
            threads: self.threads.or(other.threads),
            out: self.out.or(other.out),
            config: self.config,
        }
    }
}

#[derive(Debug, Args)]
pub struct MinmaxArgs {
    #[command(flatten)]
    pub common: Common,
    /// Also write an SVG plot of the tightened sweepout.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct TightenArgs {
    #[command(flatten)]
    pub common: Common,
    /// Curve JSON to tighten.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Wirtinger,
    Perp,
    Holder,
    Convexity,
    Continuity,
    Psi,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Scenario for the manifold-dependent suites; defaults to every conforming built-in.
    #[arg(long)]
    pub manifold: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub common: Common,
    /// Convert this curve JSON instead of generating a sweepout.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Precondition the sweepout before export.
    #[arg(long)]
    pub precondition: bool,
}
