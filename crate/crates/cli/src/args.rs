//! Flag definitions. Every knob is optional here so that a `--config` file
//! can fill what the command line leaves out; defaults apply last.

use std::path::PathBuf;

use bayes_bench::bayes_error::Method;
use bayes_bench::chebyshev::WeightScheme;
use bayes_bench::data::LabelColumn;
use bayes_bench::datagen::{DistributionSpec, Family};
use bayes_bench::density_ratio::{BandwidthPlan, LengthUnit};
use bayes_bench::estimator::EstimatorConfig;
use bayes_bench::experiments::DEFAULT_MC_SAMPLES;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Parser)]
#[command(name = "bayes-bench", version, about = "Direct Bayes error estimation and benchmarking")]
pub struct Cli {
    /// JSON file of knobs; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "BAYES_BENCH_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the Bayes error of a labeled CSV.
    Estimate(EstimateArgs),
    /// Print ensemble nodes and weights.
    Weights(WeightsArgs),
    /// Greedy forward feature selection by estimated Bayes error.
    Befs(BefsArgs),
    /// Draw a synthetic dataset as CSV.
    Simulate(SimulateArgs),
    /// Mean squared error against the oracle over sizes, schemes and alphas.
    Sweep(SweepArgs),
    /// Ensemble estimate against the HP-divergence bounds.
    Bounds(BoundsArgs),
    /// Normality check of repeated estimates.
    Clt(CltArgs),
}

/// `--flag` alone means true; `--flag false` is accepted too.
fn parse_bool(s: &str) -> Result<bool, String> {
    s.parse().map_err(|_| format!("expected true or false, got {s:?}"))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorArgs {
    /// base | symmetrized | ensemble | ensemble-symmetrized | multiclass | hp-bounds
    #[arg(long)]
    pub method: Option<Method>,
    /// Upper end of the node interval.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Ensemble size (default d + 1).
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: Option<usize>,
    /// Lower ratio clip; the upper clip is its reciprocal.
    #[arg(long)]
    pub clip_lo: Option<f64>,
    /// uniform | arithmetic | chebyshev
    #[arg(long)]
    pub scheme: Option<WeightScheme>,
    /// Standardize features before estimating.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_parser = parse_bool)]
    pub standardize: Option<bool>,
    /// Radius for the base and symmetrized methods.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Neighbor multiplier of the calibrated length unit.
    #[arg(long, conflicts_with = "length_unit")]
    pub kappa: Option<f64>,
    /// Fixed length unit instead of the calibrated one.
    #[arg(long)]
    pub length_unit: Option<f64>,
}

impl EstimatorArgs {
    pub fn resolve(&self, n_classes: usize) -> Result<EstimatorConfig, Failure> {
        let d = EstimatorConfig::default();
        let unit = match (self.length_unit, self.kappa) {
            (Some(_), Some(_)) => {
                return Err(Failure::Invalid("kappa and length_unit are mutually exclusive".into()))
            }
            (Some(u), None) => LengthUnit::Fixed(u),
            (None, Some(kappa)) => LengthUnit::Calibrated { kappa },
            (None, None) => d.plan.unit,
        };
        let cfg = EstimatorConfig {
            method: self.method.unwrap_or(Method::default_for(n_classes)),
            plan: BandwidthPlan {
                scheme: self.scheme.unwrap_or(d.plan.scheme),
                alpha: self.alpha.unwrap_or(d.plan.alpha),
                l: self.l,
                unit,
            },
            clip_lo: self.clip_lo.unwrap_or(d.clip_lo),
            standardize: self.standardize.unwrap_or(d.standardize),
            epsilon: self.epsilon,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct InputArgs {
    /// Labeled CSV with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Label column, by header name or 0-based index.
    #[arg(long)]
    pub label_col: Option<String>,
}

impl InputArgs {
    /// Input path, label selector, and the selector as given.
    pub fn resolve(&self) -> Result<(PathBuf, LabelColumn, String), Failure> {
        let input = self
            .input
            .clone()
            .ok_or_else(|| Failure::Invalid("missing --input".into()))?;
        let label = self.label_col.clone().unwrap_or_else(|| "label".into());
        Ok((input, label.parse().expect("label parsing is infallible"), label))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    GaussianShift,
    Rayleigh,
    Beta,
    Concentric,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyName>,
    /// Dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Mean shift between consecutive Gaussian classes.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Class count for the Gaussian and concentric families.
    #[arg(long)]
    pub classes: Option<usize>,
    /// Rayleigh scales, one per class.
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<f64>>,
    /// Beta shapes `a:b`, one per class.
    #[arg(long, value_delimiter = ',')]
    pub shapes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub priors: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl FamilyArgs {
    pub fn resolve(&self) -> Result<DistributionSpec, Failure> {
        let family = match self.family.unwrap_or(FamilyName::GaussianShift) {
            FamilyName::GaussianShift => Family::GaussianShift {
                delta: self.delta.unwrap_or(2.0),
                sigma: self.sigma.unwrap_or(1.0),
                classes: self.classes.unwrap_or(2),
            },
            FamilyName::Rayleigh => Family::Rayleigh {
                scales: self.scales.clone().unwrap_or_else(|| vec![0.7, 1.0, 1.3]),
            },
            FamilyName::Beta => Family::Beta {
                shapes: match &self.shapes {
                    None => vec![(3.0, 1.0), (3.0, 1.5), (3.0, 2.0)],
                    Some(v) => v.iter().map(|s| parse_shape(s)).collect::<Result<_, _>>()?,
                },
            },
            FamilyName::Concentric => Family::Concentric {
                classes: self.classes.unwrap_or(4),
            },
        };
        let mut spec = DistributionSpec::new(family, self.d.unwrap_or(2), self.seed.unwrap_or(0))?;
        if let Some(p) = &self.priors {
            spec = spec.with_priors(p.clone())?;
        }
        Ok(spec)
    }
}

fn parse_shape(s: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::Invalid(format!("invalid beta shape {s:?}, expected a:b"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorArgs,
    /// JSON report path (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightsArgs {
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: Option<usize>,
    /// Moments to cancel.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub scheme: Option<WeightScheme>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct BefsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Number of features to select.
    #[arg(long)]
    pub r: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub family: FamilyArgs,
    /// Points per class; one value applies to every class.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// CSV path (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub family: FamilyArgs,
    /// Points per class, ascending.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<WeightScheme>>,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    /// Monte-Carlo draws for oracles without a closed form.
    #[arg(long)]
    pub n_mc: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorArgs,
    /// Per-trial CSV path (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// JSON summary path.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub family: FamilyArgs,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub n_mc: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CltArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub family: FamilyArgs,
    /// Points per class.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub const DEFAULT_TRIALS: usize = 20;
pub const DEFAULT_CLT_TRIALS: usize = 200;
pub const DEFAULT_SIZES: [usize; 3] = [100, 400, 1600];

pub fn n_mc(v: Option<usize>) -> usize {
    v.unwrap_or(DEFAULT_MC_SAMPLES)
}
