//! Monte-Carlo evaluation of the estimators against known Bayes errors.
//!
//! Trial `t` at size index `s` draws its data from the generator seeded
//! with the sweep seed on stream `(s << 32) | t`. All schemes and scales in
//! a cell see the same draws, and tables come out identical whatever the
//! thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes_error::Method;
use crate::chebyshev::WeightScheme;
use crate::data::LabeledDataset;
use crate::datagen::{generate_with, oracle, DistributionSpec, OracleResult};
use crate::error::{Error, Result};
use crate::estimator::{estimate, estimate_value, EstimatorConfig};
use crate::stats::{ks_standard_normal, mean, quantile_sorted, std_dev};

/// Monte-Carlo draws for oracles without a closed form.
pub const DEFAULT_MC_SAMPLES: usize = 2_000_000;

pub const CSV_HEADER: [&str; 6] = ["scheme", "alpha", "N", "trial", "estimate", "oracle"];

/// A grid of sample sizes, weighting schemes and scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub spec: DistributionSpec,
    /// Points per class, ascending.
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub schemes: Vec<WeightScheme>,
    pub alphas: Vec<f64>,
    pub estimator: EstimatorConfig,
    pub seed: u64,
    pub n_mc: usize,
}

impl SweepConfig {
    pub fn new(spec: DistributionSpec, sizes: Vec<usize>, trials: usize) -> Self {
        let estimator = EstimatorConfig::default().with_method(Method::default_for(spec.n_classes()));
        Self {
            spec,
            sizes,
            trials,
            schemes: vec![estimator.plan.scheme],
            alphas: vec![estimator.plan.alpha],
            estimator,
            seed: 0,
            n_mc: DEFAULT_MC_SAMPLES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.estimator.validate()?;
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::invalid("sizes", "need at least one positive size"));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sizes", "must be strictly ascending"));
        }
        if self.schemes.is_empty() {
            return Err(Error::invalid("schemes", "need at least one scheme"));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::invalid("alphas", "need at least one positive alpha"));
        }
        if self.spec.n_classes() > 2 && self.estimator.method != Method::Multiclass {
            return Err(Error::invalid(
                "method",
                format!(
                    "{} is binary but the distribution has {} classes",
                    self.estimator.method,
                    self.spec.n_classes()
                ),
            ));
        }
        Ok(())
    }

    /// Data of trial `trial` at size index `size_idx`.
    pub fn draw(&self, size_idx: usize, trial: usize) -> Result<LabeledDataset> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(((size_idx as u64) << 32) | trial as u64);
        let n = vec![self.sizes[size_idx]; self.spec.n_classes()];
        generate_with(&self.spec, &n, &mut rng)
    }

    fn jobs(&self) -> Vec<(usize, usize)> {
        (0..self.sizes.len())
            .flat_map(|s| (0..self.trials).map(move |t| (s, t)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub scheme: WeightScheme,
    pub alpha: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub trial: usize,
    pub estimate: f64,
    pub oracle: f64,
}

/// Aggregate of one (scheme, α, N) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub scheme: WeightScheme,
    pub alpha: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
    pub mean: f64,
    pub std: f64,
    pub mse: f64,
    pub lo95: f64,
    pub hi95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub oracle: OracleResult,
    pub rows: Vec<TrialRow>,
    pub cells: Vec<CellSummary>,
}

/// Summary of estimates against a known truth; the interval is the
/// empirical 2.5% to 97.5% quantile range.
pub fn summarize(estimates: &[f64], truth: f64) -> (f64, f64, f64, f64, f64) {
    let mut s = estimates.to_vec();
    s.sort_by(f64::total_cmp);
    let mse = estimates.iter().map(|e| (e - truth) * (e - truth)).sum::<f64>() / estimates.len() as f64;
    (
        mean(estimates),
        std_dev(estimates),
        mse,
        quantile_sorted(&s, 0.025),
        quantile_sorted(&s, 0.975),
    )
}

/// Runs every (scheme, α, N, trial) combination and aggregates MSE against
/// the oracle.
pub fn mse_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let truth = oracle(&cfg.spec, cfg.n_mc)?;
    let combos: Vec<(WeightScheme, f64)> = cfg
        .schemes
        .iter()
        .flat_map(|&s| cfg.alphas.iter().map(move |&a| (s, a)))
        .collect();
    let per_job: Vec<Vec<f64>> = cfg
        .jobs()
        .par_iter()
        .map(|&(s, t)| {
            let ds = cfg.draw(s, t)?;
            combos
                .iter()
                .map(|&(scheme, alpha)| {
                    let mut e = cfg.estimator;
                    e.plan.scheme = scheme;
                    e.plan.alpha = alpha;
                    estimate_value(&ds, &e)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for (c, &(scheme, alpha)) in combos.iter().enumerate() {
        for (s, &n) in cfg.sizes.iter().enumerate() {
            let est: Vec<f64> = (0..cfg.trials)
                .map(|t| per_job[s * cfg.trials + t][c])
                .collect();
            for (t, &e) in est.iter().enumerate() {
                rows.push(TrialRow {
                    scheme,
                    alpha,
                    n,
                    trial: t,
                    estimate: e,
                    oracle: truth.bayes_error,
                });
            }
            let (mean, std, mse, lo95, hi95) = summarize(&est, truth.bayes_error);
            cells.push(CellSummary {
                scheme,
                alpha,
                n,
                trials: cfg.trials,
                mean,
                std,
                mse,
                lo95,
                hi95,
            });
        }
    }
    Ok(SweepResult {
        oracle: truth,
        rows,
        cells,
    })
}

/// Writes trial rows with the fixed header
/// `scheme,alpha,N,trial,estimate,oracle`.
pub fn write_rows_csv(rows: &[TrialRow], writer: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.scheme.name().to_string(),
            r.alpha.to_string(),
            r.n.to_string(),
            r.trial.to_string(),
            r.estimate.to_string(),
            r.oracle.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsTrial {
    #[serde(rename = "N")]
    pub n: usize,
    pub trial: usize,
    pub estimate: f64,
    pub hp_lower: f64,
    pub hp_upper: f64,
}

impl BoundsTrial {
    pub fn bracketed(&self) -> bool {
        self.hp_lower <= self.estimate && self.estimate <= self.hp_upper
    }
}

/// Trial means at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub estimate: f64,
    pub hp_lower: f64,
    pub hp_upper: f64,
    pub oracle: f64,
    /// Share of trials with `hp_lower ≤ estimate ≤ hp_upper`.
    pub bracketed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsTable {
    pub oracle: OracleResult,
    pub rows: Vec<BoundsRow>,
    pub trials: Vec<BoundsTrial>,
}

/// Ensemble estimate against the HP-divergence bracket at every size. The
/// estimator's own scheme and α are used; the sweep's scheme and α lists
/// are ignored.
pub fn bounds_comparison(cfg: &SweepConfig) -> Result<BoundsTable> {
    if cfg.spec.n_classes() != 2 {
        return Err(Error::invalid("classes", "bounds comparison needs a binary distribution"));
    }
    cfg.validate()?;
    let truth = oracle(&cfg.spec, cfg.n_mc)?;
    let est_cfg = cfg.estimator.with_method(Method::HpBounds);
    let trials: Vec<BoundsTrial> = cfg
        .jobs()
        .par_iter()
        .map(|&(s, t)| {
            let ds = cfg.draw(s, t)?;
            let r = estimate(&ds, &est_cfg)?;
            let hp = r.hp.expect("hp method reports bounds");
            Ok(BoundsTrial {
                n: cfg.sizes[s],
                trial: t,
                estimate: r.report.estimate,
                hp_lower: hp.lower,
                hp_upper: hp.upper,
            })
        })
        .collect::<Result<_>>()?;
    let rows = cfg
        .sizes
        .iter()
        .enumerate()
        .map(|(s, &n)| {
            let cell = &trials[s * cfg.trials..(s + 1) * cfg.trials];
            let avg = |f: fn(&BoundsTrial) -> f64| cell.iter().map(f).sum::<f64>() / cell.len() as f64;
            BoundsRow {
                n,
                estimate: avg(|t| t.estimate),
                hp_lower: avg(|t| t.hp_lower),
                hp_upper: avg(|t| t.hp_upper),
                oracle: truth.bayes_error,
                bracketed: cell.iter().filter(|t| t.bracketed()).count() as f64 / cell.len() as f64,
            }
        })
        .collect();
    Ok(BoundsTable {
        oracle: truth,
        rows,
        trials,
    })
}

/// Normality check of repeated estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltResult {
    pub trials: usize,
    pub mean: f64,
    pub std: f64,
    pub ks_statistic: f64,
    pub p_value: f64,
    /// `p_value ≥ 0.01`.
    pub pass: bool,
    /// Estimates standardized by their own sample mean and deviation.
    pub standardized: Vec<f64>,
    pub note: &'static str,
}

pub const CLT_LEVEL: f64 = 0.01;
pub const CLT_MIN_TRIALS: usize = 100;

/// KS test of standardized `values` against `N(0, 1)`.
pub fn clt_from_values(values: &[f64]) -> Result<CltResult> {
    let m = mean(values);
    let s = std_dev(values);
    if values.len() < 2 || values.iter().all(|&v| v == values[0]) || s.is_nan() || s <= 0.0 {
        return Err(Error::Degenerate(values.len()));
    }
    let standardized: Vec<f64> = values.iter().map(|v| (v - m) / s).collect();
    let (d, p) = ks_standard_normal(&standardized);
    Ok(CltResult {
        trials: values.len(),
        mean: m,
        std: s,
        ks_statistic: d,
        p_value: p,
        pass: p >= CLT_LEVEL,
        standardized,
        note: "standardized with the sample mean and deviation; the p-value is approximate",
    })
}

/// Runs `trials` independent estimates on fresh data with `n` points per
/// class and tests them for normality.
pub fn clt_diagnostic(
    spec: &DistributionSpec,
    n: usize,
    trials: usize,
    est: &EstimatorConfig,
    seed: u64,
) -> Result<CltResult> {
    if trials < CLT_MIN_TRIALS {
        return Err(Error::invalid(
            "trials",
            format!("need at least {CLT_MIN_TRIALS}, got {trials}"),
        ));
    }
    let mut cfg = SweepConfig::new(spec.clone(), vec![n], trials);
    cfg.estimator = *est;
    cfg.seed = seed;
    cfg.validate()?;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| estimate_value(&cfg.draw(0, t)?, est))
        .collect::<Result<_>>()?;
    clt_from_values(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn small(trials: usize) -> SweepConfig {
        let spec = DistributionSpec::gaussian_shift(2, 2.0, 0).unwrap();
        SweepConfig::new(spec, vec![30, 60], trials)
    }

    #[test]
    fn single_row() {
        let mut cfg = small(1);
        cfg.sizes = vec![40];
        let r = mse_sweep(&cfg).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.cells.len(), 1);
    }

    #[test]
    fn reproducible_and_bounded() {
        let mut cfg = small(4);
        cfg.schemes = WeightScheme::ALL.to_vec();
        cfg.alphas = vec![0.3, 0.5];
        let a = mse_sweep(&cfg).unwrap();
        let b = mse_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 3 * 2 * 2 * 4);
        assert!(a.rows.iter().all(|r| (0.0..=0.5).contains(&r.estimate)));
    }

    #[test]
    fn length_one_schemes_coincide() {
        let mut cfg = small(3);
        cfg.schemes = WeightScheme::ALL.to_vec();
        cfg.estimator.plan.l = Some(1);
        let r = mse_sweep(&cfg).unwrap();
        let per = r.rows.len() / 3;
        for i in 0..per {
            assert_eq!(r.rows[i].estimate, r.rows[per + i].estimate);
            assert_eq!(r.rows[i].estimate, r.rows[2 * per + i].estimate);
        }
    }

    #[test]
    fn mse_ignores_trial_order() {
        let e = [0.1, 0.3, 0.2, 0.25];
        let mut f = e;
        f.reverse();
        assert_eq!(summarize(&e, 0.2).2, summarize(&f, 0.2).2);
    }

    #[test]
    fn csv_header() {
        let r = mse_sweep(&small(1)).unwrap();
        let mut buf = Vec::new();
        write_rows_csv(&r.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("scheme,alpha,N,trial,estimate,oracle\n"));
        assert_eq!(text.lines().count(), 1 + r.rows.len());
    }

    #[test]
    fn invalid_sweeps() {
        let mut cfg = small(1);
        cfg.sizes = vec![60, 30];
        assert!(mse_sweep(&cfg).is_err());
        let mut cfg = small(0);
        cfg.trials = 0;
        assert!(mse_sweep(&cfg).is_err());
        let spec = DistributionSpec::new(
            crate::datagen::Family::Rayleigh { scales: vec![1.0, 2.0, 3.0] },
            2,
            0,
        )
        .unwrap();
        let mut cfg = SweepConfig::new(spec, vec![30], 1);
        assert!(bounds_comparison(&cfg).is_err());
        cfg.estimator.method = Method::Ensemble;
        assert!(mse_sweep(&cfg).is_err());
    }

    #[test]
    fn bounds_rows_ascend() {
        let t = bounds_comparison(&small(2)).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows[0].n < t.rows[1].n);
        assert!(t.rows.iter().all(|r| r.hp_lower <= r.hp_upper));
    }

    #[test]
    fn clt_machinery() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let z: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(clt_from_values(&z).unwrap().pass);
        assert!(matches!(clt_from_values(&[0.3; 150]), Err(Error::Degenerate(150))));
        let spec = DistributionSpec::gaussian_shift(2, 2.0, 0).unwrap();
        assert!(clt_diagnostic(&spec, 50, 20, &EstimatorConfig::default(), 0).is_err());
    }
}
