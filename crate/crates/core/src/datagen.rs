//! Synthetic class distributions with known Bayes error.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::beta::ln_beta;
use statrs::function::erf::erfc;

use crate::data::{LabeledDataset, Points};
use crate::error::{Error, Result};

/// Distribution family with one parameter set per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// Isotropic normals `N(i·δ·e_1, σ²I)` for classes `i = 0..classes`.
    GaussianShift {
        delta: f64,
        sigma: f64,
        classes: usize,
    },
    /// Independent Rayleigh coordinates with one scale per class.
    Rayleigh { scales: Vec<f64> },
    /// Independent beta coordinates with one `(a, b)` pair per class.
    Beta { shapes: Vec<(f64, f64)> },
    /// A standard normal cut into `classes` equal-probability radial shells;
    /// class 1 is the innermost.
    Concentric { classes: usize },
}

impl Family {
    pub fn n_classes(&self) -> usize {
        match self {
            Family::GaussianShift { classes, .. } | Family::Concentric { classes } => *classes,
            Family::Rayleigh { scales } => scales.len(),
            Family::Beta { shapes } => shapes.len(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::GaussianShift { .. } => "gaussian_shift",
            Family::Rayleigh { .. } => "rayleigh",
            Family::Beta { .. } => "beta",
            Family::Concentric { .. } => "concentric",
        }
    }
}

/// A family in a given dimension, with class priors and a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    #[serde(flatten)]
    pub family: Family,
    pub dim: usize,
    pub priors: Vec<f64>,
    pub seed: u64,
}

fn positive(field: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be positive, got {x}")))
    }
}

impl DistributionSpec {
    /// Spec with equal priors.
    pub fn new(family: Family, dim: usize, seed: u64) -> Result<Self> {
        let k = family.n_classes();
        let spec = Self {
            family,
            dim,
            priors: vec![1.0 / k.max(1) as f64; k],
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian_shift(dim: usize, delta: f64, seed: u64) -> Result<Self> {
        Self::new(
            Family::GaussianShift {
                delta,
                sigma: 1.0,
                classes: 2,
            },
            dim,
            seed,
        )
    }

    pub fn with_priors(mut self, priors: Vec<f64>) -> Result<Self> {
        self.priors = priors;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn n_classes(&self) -> usize {
        self.family.n_classes()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.family.n_classes();
        if k < 2 {
            return Err(Error::TooFewClasses(k));
        }
        if self.dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        match &self.family {
            Family::GaussianShift { delta, sigma, .. } => {
                if !delta.is_finite() {
                    return Err(Error::invalid("delta", "must be finite"));
                }
                positive("sigma", *sigma)?;
            }
            Family::Rayleigh { scales } => scales.iter().try_for_each(|&a| positive("scale", a))?,
            Family::Beta { shapes } => shapes.iter().try_for_each(|&(a, b)| {
                positive("beta shape", a)?;
                positive("beta shape", b)
            })?,
            Family::Concentric { .. } => {}
        }
        if self.priors.len() != k {
            return Err(Error::LengthMismatch {
                what: "priors",
                expected: k,
                found: self.priors.len(),
            });
        }
        let s: f64 = self.priors.iter().sum();
        if self.priors.iter().any(|&p| p.is_nan() || p <= 0.0) || (s - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("priors", "must be positive and sum to 1"));
        }
        Ok(())
    }

    /// Squared-radius cut points of the concentric shells.
    fn shell_edges(&self) -> Vec<f64> {
        let k = self.n_classes();
        let chi2 = ChiSquared::new(self.dim as f64).expect("dim >= 1");
        (1..k).map(|i| chi2.inverse_cdf(i as f64 / k as f64)).collect()
    }
}

/// Shell of a squared radius; shells are closed on the left.
fn shell_of(edges: &[f64], r2: f64) -> usize {
    edges.partition_point(|&e| e <= r2)
}

fn sample_class(spec: &DistributionSpec, class: usize, rng: &mut ChaCha20Rng, out: &mut [f64]) {
    match &spec.family {
        Family::GaussianShift { delta, sigma, .. } => {
            for (j, x) in out.iter_mut().enumerate() {
                let z: f64 = StandardNormal.sample(rng);
                *x = sigma * z + if j == 0 { class as f64 * delta } else { 0.0 };
            }
        }
        Family::Rayleigh { scales } => {
            let a = scales[class];
            for x in out.iter_mut() {
                let u = 1.0 - rng.random::<f64>();
                *x = a * (-2.0 * u.ln()).sqrt();
            }
        }
        Family::Beta { shapes } => {
            let (a, b) = shapes[class];
            let dist = Beta::new(a, b).expect("validated shapes");
            for x in out.iter_mut() {
                *x = dist.sample(rng);
            }
        }
        Family::Concentric { .. } => unreachable!("concentric classes are drawn jointly"),
    }
}

/// Draws `n_per_class[c]` points of every class from `rng`.
///
/// Concentric data is drawn from the standard normal and each point is
/// kept only while its shell still needs points, which samples every shell
/// from its truncated distribution.
pub fn generate_with(
    spec: &DistributionSpec,
    n_per_class: &[usize],
    rng: &mut ChaCha20Rng,
) -> Result<LabeledDataset> {
    spec.validate()?;
    let k = spec.n_classes();
    if n_per_class.len() != k {
        return Err(Error::LengthMismatch {
            what: "class sizes",
            expected: k,
            found: n_per_class.len(),
        });
    }
    if let Some(c) = n_per_class.iter().position(|&n| n == 0) {
        return Err(Error::invalid("n", format!("class {} has no points", c + 1)));
    }
    let d = spec.dim;
    let total: usize = n_per_class.iter().sum();
    let mut data = Vec::with_capacity(total * d);
    let mut labels = Vec::with_capacity(total);
    let mut buf = vec![0.0; d];
    if let Family::Concentric { .. } = spec.family {
        let edges = spec.shell_edges();
        let mut need = n_per_class.to_vec();
        let mut left = total;
        while left > 0 {
            for x in buf.iter_mut() {
                *x = StandardNormal.sample(rng);
            }
            let c = shell_of(&edges, buf.iter().map(|x| x * x).sum());
            if need[c] > 0 {
                need[c] -= 1;
                left -= 1;
                data.extend_from_slice(&buf);
                labels.push(c);
            }
        }
    } else {
        for (c, &n) in n_per_class.iter().enumerate() {
            for _ in 0..n {
                sample_class(spec, c, rng, &mut buf);
                data.extend_from_slice(&buf);
                labels.push(c);
            }
        }
    }
    LabeledDataset::new(Points::new(total, d, data)?, labels, k)
}

/// [`generate_with`] from a generator seeded with `spec.seed`.
pub fn generate(spec: &DistributionSpec, n_per_class: &[usize]) -> Result<LabeledDataset> {
    generate_with(spec, n_per_class, &mut ChaCha20Rng::seed_from_u64(spec.seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    Analytic,
    MonteCarlo,
}

/// True Bayes error of a spec, exact or sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleResult {
    pub bayes_error: f64,
    pub method: OracleMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Bayes error of `N(0, σ²I)` against `N(Δe_1, σ²I)` with priors `p1, p2`:
/// the likelihood-ratio test thresholds the first coordinate at
/// `Δ/2 + σ² ln(p1/p2)/Δ`.
pub fn analytic_gaussian_bayes_error(delta: f64, sigma: f64, p1: f64, p2: f64) -> Result<OracleResult> {
    positive("sigma", sigma)?;
    let delta = delta.abs();
    let err = if delta == 0.0 {
        p1.min(p2)
    } else {
        let t = delta / 2.0 + sigma * sigma * (p1 / p2).ln() / delta;
        p1 * std_normal_cdf(-t / sigma) + p2 * std_normal_cdf((t - delta) / sigma)
    };
    Ok(OracleResult {
        bayes_error: err,
        method: OracleMethod::Analytic,
        mc_samples: None,
        std_error: None,
    })
}

/// Log densities of `x` under every class, up to a shared constant.
fn log_densities(spec: &DistributionSpec, x: &[f64], out: &mut [f64]) {
    match &spec.family {
        Family::GaussianShift { delta, sigma, .. } => {
            let rest: f64 = x[1..].iter().map(|v| v * v).sum();
            for (c, o) in out.iter_mut().enumerate() {
                let t = x[0] - c as f64 * delta;
                *o = -(t * t + rest) / (2.0 * sigma * sigma);
            }
        }
        Family::Rayleigh { scales } => {
            let s: f64 = x.iter().map(|v| v.ln()).sum();
            let q: f64 = x.iter().map(|v| v * v).sum();
            let d = x.len() as f64;
            for (o, &a) in out.iter_mut().zip(scales) {
                *o = s - 2.0 * d * a.ln() - q / (2.0 * a * a);
            }
        }
        Family::Beta { shapes } => {
            for (o, &(a, b)) in out.iter_mut().zip(shapes) {
                *o = x
                    .iter()
                    .map(|&v| (a - 1.0) * v.ln() + (b - 1.0) * (1.0 - v).ln() - ln_beta(a, b))
                    .sum();
            }
        }
        Family::Concentric { .. } => unreachable!("handled by shell lookup"),
    }
}

/// Posterior probability of the most likely class at `x`.
fn max_posterior(spec: &DistributionSpec, x: &[f64], logf: &mut [f64]) -> f64 {
    log_densities(spec, x, logf);
    for (l, p) in logf.iter_mut().zip(&spec.priors) {
        *l += p.ln();
    }
    let m = logf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logf.iter().map(|l| (l - m).exp()).sum();
    1.0 / z
}

const MC_BATCH: usize = 1 << 14;

/// `1 − E[max_i P(i | X)]` over `n_mc` draws from the prior-weighted
/// mixture, with its standard error. Batches use independent streams of
/// the seeded generator, so the result is deterministic.
pub fn mc_bayes_error_oracle(spec: &DistributionSpec, n_mc: usize, seed: u64) -> Result<OracleResult> {
    spec.validate()?;
    if n_mc < 2 {
        return Err(Error::invalid("n_mc", "need at least 2 samples"));
    }
    let k = spec.n_classes();
    if let Family::Concentric { .. } = spec.family {
        // a point lies in exactly one shell, whose posterior is then 1
        return Ok(OracleResult {
            bayes_error: 0.0,
            method: OracleMethod::MonteCarlo,
            mc_samples: Some(n_mc),
            std_error: Some(0.0),
        });
    }
    let n_batches = n_mc.div_ceil(MC_BATCH);
    let sums: Vec<(f64, f64)> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let n = MC_BATCH.min(n_mc - b * MC_BATCH);
            let mut x = vec![0.0; spec.dim];
            let mut logf = vec![0.0; k];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let u: f64 = rng.random();
                let mut c = 0;
                let mut acc = spec.priors[0];
                while c + 1 < k && u >= acc {
                    c += 1;
                    acc += spec.priors[c];
                }
                sample_class(spec, c, &mut rng, &mut x);
                let e = 1.0 - max_posterior(spec, &x, &mut logf);
                s += e;
                s2 += e * e;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = n_mc as f64;
    let mean = s / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(OracleResult {
        bayes_error: mean,
        method: OracleMethod::MonteCarlo,
        mc_samples: Some(n_mc),
        std_error: Some((var / n).sqrt()),
    })
}

/// Analytic oracle when one exists (binary Gaussian shift, concentric),
/// otherwise Monte-Carlo with `n_mc` draws.
pub fn oracle(spec: &DistributionSpec, n_mc: usize) -> Result<OracleResult> {
    spec.validate()?;
    match spec.family {
        Family::GaussianShift {
            delta,
            sigma,
            classes: 2,
        } => analytic_gaussian_bayes_error(delta, sigma, spec.priors[0], spec.priors[1]),
        Family::Concentric { .. } => Ok(OracleResult {
            bayes_error: 0.0,
            method: OracleMethod::Analytic,
            mc_samples: None,
            std_error: None,
        }),
        _ => mc_bayes_error_oracle(spec, n_mc, spec.seed ^ 0x9e37_79b9_7f4a_7c15),
    }
}
