use clap::{Args, Parser, Subcommand, ValueEnum};
use fpl_core::acceptance::Suite;
use fpl_core::Preset;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "fpl", version, about = "Heat and fractional Poisson kernels on hyperbolic spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel values along a list of radii.
    Kernel(KernelArgs),
    /// Ratios to the sharp asymptotics and to the two-sided bounds.
    Asympt(AsymptArgs),
    /// Total masses, optionally split by the critical region.
    Mass(MassArgs),
    /// Runs a convergence experiment described by a key=value file.
    Converge(ConvergeArgs),
    /// Distance between a kernel and its translate, against the boundary functional.
    Counterexample(CounterexampleArgs),
    /// Runs the acceptance criteria.
    Accept(AcceptArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Space preset.
    #[arg(long, default_value = "H3", value_parser = parse_preset)]
    pub space: Preset,
    /// Relative tolerance of the quadratures.
    #[arg(long, default_value_t = 1e-10)]
    pub rel_tol: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest file; defaults to `<out>.manifest.json`, or stderr without `--out`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    Closed,
    Spectral,
    Subordination,
    /// Subordination and spectral side by side.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    /// The kernel on the symmetric space.
    X,
    /// The distinguished kernel on the solvable group.
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RadiusPath {
    /// r = 0.
    Origin,
    /// r = t.
    Linear,
    /// r = t².
    Quadratic,
}

impl RadiusPath {
    pub fn at(self, t: f64) -> f64 {
        match self {
            RadiusPath::Origin => 0.0,
            RadiusPath::Linear => t,
            RadiusPath::Quadratic => t * t,
        }
    }
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    pub r: Vec<f64>,
    #[arg(long, value_enum, default_value = "closed")]
    pub route: RouteArg,
    #[arg(long, value_enum, default_value = "x")]
    pub side: Side,
}

#[derive(Debug, Args)]
pub struct AsymptArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value = "quadratic")]
    pub path: RadiusPath,
    #[arg(long, value_enum, default_value = "x")]
    pub side: Side,
}

#[derive(Debug, Args)]
pub struct MassArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// Width exponent of the critical region.
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    /// Experiment file with keys space, sigma, eps, t_grid, datum, norms, out.
    pub config: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    pub rel_tol: f64,
    /// Overrides the `out` key.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// Distance of the translated pole from the origin.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
}

#[derive(Debug, Args)]
pub struct AcceptArgs {
    #[arg(long, default_value = "fast", value_parser = parse_suite)]
    pub suite: Suite,
    /// Only these criteria, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Golden file to check against instead of the built-in one.
    #[arg(long)]
    pub golden: Option<PathBuf>,
    /// Recomputes the golden constants into this file and exits.
    #[arg(long)]
    pub write_golden: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: fpl_core::Error| e.to_string())
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: fpl_core::Error| e.to_string())
}
