use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kfbd::estimation::{DependenceSpec, LocationModel};
use kfbd::{KernelFamily, RadialGenerator};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "kfbd",
    version,
    about = "Kernelized functional Bregman divergences: estimates, checks and audits"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed for every random stream (default 42).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "KFBD_THREADS")]
    pub threads: Option<usize>,
    /// Emit JSON.
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,
    /// Emit CSV.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Write output to this file (atomically) instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON experiment config; unknown keys are rejected.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deformed squared MMD (and optionally an operator-based estimate) between two samples.
    Divergence(DivergenceArgs),
    /// Run a property suite; exits with 1 if any property fails.
    Verify(VerifyArgs),
    /// Closed-form and numerical curvature constants of the radial generators.
    Table2(Table2Args),
    /// Minimum-divergence location fit to a sample.
    Fit(FitArgs),
    /// Monte Carlo audits of the estimation bounds.
    AuditBound(AuditArgs),
    /// Per-pair sandwich bound data for plotting.
    SandwichScan(ScanArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GeneratorArgs {
    /// Radial profile: square, exp_centered, logcosh, sqrtplus, quartic[:lambda], power[:p].
    #[arg(long)]
    pub generator: Option<String>,
    /// Exponent for `--generator power`.
    #[arg(long)]
    pub p: Option<f64>,
    /// Coefficient for `--generator quartic`.
    #[arg(long)]
    pub lambda: Option<f64>,
}

impl GeneratorArgs {
    /// The requested generator, `None` if no profile was named.
    pub fn resolve(&self) -> Result<Option<RadialGenerator>, CliError> {
        let Some(name) = self.generator.as_deref() else {
            if self.p.is_some() || self.lambda.is_some() {
                return Err(CliError::Input("--p and --lambda need --generator".into()));
            }
            return Ok(None);
        };
        let spec = match (
            name.contains(':'),
            name.trim().to_ascii_lowercase().as_str(),
            self.p,
            self.lambda,
        ) {
            (false, "power", Some(p), None) => format!("power:{p}"),
            (false, "quartic", None, Some(l)) => format!("quartic:{l}"),
            (_, _, None, None) => name.to_string(),
            _ => {
                return Err(CliError::Input(format!(
                    "--p/--lambda do not apply to generator `{name}`"
                )))
            }
        };
        Ok(Some(spec.parse()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OperatorKind {
    /// `G = Id`
    Identity,
    /// `G(mu) = sigma(|mu|) mu` with `sigma(t) = phi(t) / t^2`
    Deformed,
    /// `G(mu) = int log(mu(x)) k(x, .) dx` on a 1-d grid
    PointwiseLog,
}

#[derive(Debug, Args)]
pub struct DivergenceArgs {
    /// First sample `p` (CSV or JSON).
    #[arg(value_name = "P")]
    pub first: Option<PathBuf>,
    /// Second sample `q` (CSV or JSON).
    #[arg(value_name = "Q")]
    pub second: Option<PathBuf>,
    /// Kernel as `family:width` (gaussian, laplace, imq); default gaussian:1.
    #[arg(long)]
    pub kernel: Option<KernelFamily<f64>>,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Also report the plug-in estimate for this operator.
    #[arg(long, value_enum)]
    pub operator: Option<OperatorKind>,
    /// Quadrature points for `--operator pointwise-log`.
    #[arg(long, default_value_t = 2001)]
    pub grid_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Findim,
    Sandwich,
    EstimationSmoke,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Trials: identity instances for findim, random pairs for sandwich (default 10000).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Ball radius for the sandwich suite.
    #[arg(long = "R", alias = "radius", default_value_t = 1.0)]
    pub radius: f64,
}

#[derive(Debug, Args)]
pub struct Table2Args {
    /// Radius of the ball the constants are taken over.
    #[arg(long = "R", alias = "radius", default_value_t = 1.0)]
    pub radius: f64,
    /// Quartic coefficient.
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// Power exponent.
    #[arg(long, default_value_t = 3.0)]
    pub p: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Sample to fit (CSV or JSON).
    #[arg(value_name = "DATA")]
    pub data: Option<PathBuf>,
    /// Same as the positional sample path.
    #[arg(long = "data", value_name = "DATA", conflicts_with = "data")]
    pub data_flag: Option<PathBuf>,
    /// Location model as `family:scale` (gaussian, laplace); default gaussian:1.
    #[arg(long)]
    pub model: Option<LocationModel>,
    /// Kernel as `family:width`; default gaussian:1.
    #[arg(long)]
    pub kernel: Option<KernelFamily<f64>>,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Model sample size (at least 100).
    #[arg(long, default_value_t = 200)]
    pub model_sample_size: usize,
    /// Jittered restarts besides the median start.
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AuditKind {
    /// Expected divergence of the fit against its bound, over a grid of n.
    Expectation,
    /// Per-instance triangle inequality through the fitted model.
    Triangle,
    /// Fit against the sample mean under contamination, and its rate in n.
    Robustness,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long, value_enum, default_value = "expectation")]
    pub kind: AuditKind,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Kernel as `family:width`; default gaussian:1.
    #[arg(long)]
    pub kernel: Option<KernelFamily<f64>>,
    /// Location model as `family:scale`; default gaussian:1.
    #[arg(long)]
    pub model: Option<LocationModel>,
    /// True location.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta0: f64,
    /// Contamination fraction.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Point-mass contaminant offset from the true location.
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub offset: f64,
    /// `iid` or `ar1:<coefficient>`.
    #[arg(long, default_value = "iid")]
    pub dependence: DependenceSpec,
    /// Sample sizes for the expectation audit.
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    pub n_grid: Vec<usize>,
    /// Replicates per sample size (default 10; 50 for robustness).
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Model sample size for each fit (default 100; 200 for robustness).
    #[arg(long)]
    pub model_sample_size: Option<usize>,
    /// Instances for the triangle audit.
    #[arg(long, default_value_t = 200)]
    pub instances: usize,
    /// Size of the stratified stand-in for the data distribution.
    #[arg(long, default_value_t = 4000)]
    pub reference_size: usize,
    /// Sample size for the robustness study.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Growth factor of the larger robustness sample.
    #[arg(long, default_value_t = 4)]
    pub factor: usize,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, default_value_t = 1000)]
    pub pairs: usize,
    #[arg(long = "R", alias = "radius", default_value_t = 1.0)]
    pub radius: f64,
}
