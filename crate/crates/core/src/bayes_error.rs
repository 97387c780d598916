//! Bayes error estimators built on clamped density-ratio estimates.
//!
//! With priors `p_1, p_2` and the ratio `U = f_1/f_2` seen from class-2
//! points, the binary Bayes error is `min(p_1, p_2) − E_{f_2}[t(U)]` where
//!
//! ```text
//! t(x) = max(p_2 − p_1 x, 0) − max(p_2 − p_1, 0)
//! ```
//!
//! Every estimator here plugs a clamped ε-ball (or ensemble) ratio into
//! that identity, or into its multiclass generalization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chebyshev::WeightVector;
use crate::data::{estimate_priors, ClassPartition, PriorEstimate};
use crate::density_ratio::{
    clip_ratio, ensemble_ratio, neighbor_counts, BandwidthSchedule, ClipBounds,
    DensityRatioEstimate,
};
use crate::error::{Error, Result};
use crate::geometry::build_index;

/// `max(p2 − p1·x, 0) − max(p2 − p1, 0)`.
#[inline]
pub fn divergence_t(x: f64, p1: f64, p2: f64) -> f64 {
    (p2 - p1 * x).max(0.0) - (p2 - p1).max(0.0)
}

/// `max(0, p_k − max_{i<k} p_i x_i)` for the zero-based class `k`;
/// `x` holds the `k` ratios against the earlier classes.
pub fn multiclass_t(x: &[f64], p: &[f64], k: usize) -> f64 {
    debug_assert_eq!(x.len(), k);
    let best = x
        .iter()
        .zip(p)
        .map(|(xi, pi)| pi * xi)
        .fold(f64::NEG_INFINITY, f64::max);
    (p[k] - best).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Base,
    Symmetrized,
    Ensemble,
    EnsembleSymmetrized,
    Multiclass,
    HpBounds,
}

impl Method {
    /// Ensemble for two classes, multiclass otherwise.
    pub fn default_for(n_classes: usize) -> Method {
        if n_classes > 2 {
            Method::Multiclass
        } else {
            Method::Ensemble
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Base => "base",
            Method::Symmetrized => "symmetrized",
            Method::Ensemble => "ensemble",
            Method::EnsembleSymmetrized => "ensemble_symmetrized",
            Method::Multiclass => "multiclass",
            Method::HpBounds => "hp_bounds",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").to_ascii_lowercase().as_str() {
            "base" => Method::Base,
            "symmetrized" => Method::Symmetrized,
            "ensemble" => Method::Ensemble,
            "ensemble_symmetrized" => Method::EnsembleSymmetrized,
            "multiclass" => Method::Multiclass,
            "hp_bounds" => Method::HpBounds,
            _ => {
                return Err(Error::invalid(
                    "method",
                    format!(
                        "{s:?} is not one of base, symmetrized, ensemble, \
                         ensemble_symmetrized, multiclass, hp_bounds"
                    ),
                ))
            }
        })
    }
}

/// Radii used for the queries of one class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleSummary {
    pub query_class: usize,
    pub n_basis: usize,
    pub length_unit: f64,
    pub radii: Vec<f64>,
}

impl ScheduleSummary {
    fn single(query_class: usize, n_basis: usize, radius: f64) -> Self {
        Self {
            query_class: query_class + 1,
            n_basis,
            length_unit: 1.0,
            radii: vec![radius],
        }
    }

    fn of(query_class: usize, s: &BandwidthSchedule) -> Self {
        Self {
            query_class: query_class + 1,
            n_basis: s.n_basis(),
            length_unit: s.unit(),
            radii: s.radii().to_vec(),
        }
    }
}

/// A Bayes error estimate with what went into it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub estimate: f64,
    /// Value before the final clamp into `[0, 1 − max p̂]`.
    pub raw_estimate: f64,
    pub method: Method,
    pub priors: PriorEstimate,
    #[serde(rename = "L")]
    pub l: usize,
    pub alpha: Option<f64>,
    pub clip_lo: f64,
    /// Share of query points whose ratio hit a clip bound.
    pub clamped_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_map: Option<BTreeMap<String, usize>>,
    pub weights: Vec<f64>,
    pub schedules: Vec<ScheduleSummary>,
}

/// HP divergence estimate and the Bayes error bracket it implies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HpBoundReport {
    pub divergence_estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

fn require_binary(part: &ClassPartition) -> Result<()> {
    if part.n_classes() != 2 {
        return Err(Error::invalid(
            "classes",
            format!("binary estimator needs exactly 2 classes, got {}", part.n_classes()),
        ));
    }
    Ok(())
}

fn check_lengths(radii: usize, w: &WeightVector) -> Result<()> {
    if radii != w.len() {
        return Err(Error::LengthMismatch {
            what: "ensemble weights",
            expected: radii,
            found: w.len(),
        });
    }
    Ok(())
}

/// Clamped ensemble ratios `f_a/f_b` at the class-`b` points, one estimate
/// per numerator class in `numerators`.
fn clamped_ratios(
    part: &ClassPartition,
    numerators: &[usize],
    b: usize,
    radii: &[f64],
    w: &WeightVector,
    clip: ClipBounds,
) -> Result<Vec<DensityRatioEstimate>> {
    check_lengths(radii.len(), w)?;
    let idx = build_index(part);
    let counts = neighbor_counts(&idx, part.class(b), radii);
    numerators
        .iter()
        .map(|&a| {
            let base: Vec<_> = (0..radii.len())
                .map(|l| counts.ratio_estimate(l, a, b))
                .collect();
            Ok(clip_ratio(&ensemble_ratio(&base, w)?, clip))
        })
        .collect()
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    values.sum::<f64>() / n as f64
}

struct Directional {
    raw: f64,
    clamped: usize,
    queries: usize,
}

/// `min(p_a, p_b) − mean t(Û)` with `Û = f_a/f_b` at the class-`b` points.
fn directional(
    part: &ClassPartition,
    priors: &PriorEstimate,
    a: usize,
    b: usize,
    radii: &[f64],
    w: &WeightVector,
    clip: ClipBounds,
) -> Result<Directional> {
    let u = clamped_ratios(part, &[a], b, radii, w, clip)?.remove(0);
    let (pa, pb) = (priors.get(a), priors.get(b));
    let m = mean(u.values().iter().map(|&x| divergence_t(x, pa, pb)));
    Ok(Directional {
        raw: pa.min(pb) - m,
        clamped: u.clamped().iter().filter(|&&c| c).count(),
        queries: u.len(),
    })
}

fn clamp_estimate(x: f64, priors: &PriorEstimate) -> f64 {
    x.clamp(0.0, 1.0 - priors.max())
}

#[allow(clippy::too_many_arguments)]
fn report(
    raw: f64,
    method: Method,
    priors: PriorEstimate,
    alpha: Option<f64>,
    clip: ClipBounds,
    clamped: usize,
    queries: usize,
    w: &WeightVector,
    schedules: Vec<ScheduleSummary>,
) -> EstimateReport {
    EstimateReport {
        estimate: clamp_estimate(raw, &priors),
        raw_estimate: raw,
        method,
        priors,
        l: w.len(),
        alpha,
        clip_lo: clip.lo(),
        clamped_fraction: clamped as f64 / queries.max(1) as f64,
        label_map: None,
        weights: w.as_slice().to_vec(),
        schedules,
    }
}

/// Single-bandwidth estimate from the class-2 points.
pub fn base_binary_estimate(
    part: &ClassPartition,
    eps: f64,
    clip: ClipBounds,
) -> Result<EstimateReport> {
    require_binary(part)?;
    let priors = estimate_priors(part);
    let w = WeightVector::uniform(1);
    let d = directional(part, &priors, 0, 1, &[eps], &w, clip)?;
    let n = part.counts();
    Ok(report(
        d.raw,
        Method::Base,
        priors,
        None,
        clip,
        d.clamped,
        d.queries,
        &w,
        vec![ScheduleSummary::single(1, n[0], eps)],
    ))
}

/// `(N_2/N)·Ê(X_1, X_2) + (N_1/N)·Ê(X_2, X_1)`, each direction with its own
/// class roles and priors.
fn symmetrize(
    part: &ClassPartition,
    priors: &PriorEstimate,
    forward: &[f64],
    reverse: &[f64],
    w: &WeightVector,
    clip: ClipBounds,
) -> Result<(f64, usize)> {
    let f = directional(part, priors, 0, 1, forward, w, clip)?;
    let r = directional(part, priors, 1, 0, reverse, w, clip)?;
    let n = part.counts();
    let nt = part.total() as f64;
    let est = n[1] as f64 / nt * clamp_estimate(f.raw, priors)
        + n[0] as f64 / nt * clamp_estimate(r.raw, priors);
    Ok((est, f.clamped + r.clamped))
}

/// Directional estimates averaged with sample-fraction weights, so that
/// both classes serve as query points.
pub fn symmetrized_estimate(
    part: &ClassPartition,
    eps: f64,
    clip: ClipBounds,
) -> Result<EstimateReport> {
    require_binary(part)?;
    let priors = estimate_priors(part);
    let w = WeightVector::uniform(1);
    let (est, clamped) = symmetrize(part, &priors, &[eps], &[eps], &w, clip)?;
    let n = part.counts();
    Ok(report(
        est,
        Method::Symmetrized,
        priors,
        None,
        clip,
        clamped,
        part.total(),
        &w,
        vec![
            ScheduleSummary::single(1, n[0], eps),
            ScheduleSummary::single(0, n[1], eps),
        ],
    ))
}

/// Weighted-ensemble estimate from the class-2 points.
pub fn ensemble_binary_estimate(
    part: &ClassPartition,
    schedule: &BandwidthSchedule,
    w: &WeightVector,
    clip: ClipBounds,
) -> Result<EstimateReport> {
    require_binary(part)?;
    let priors = estimate_priors(part);
    let d = directional(part, &priors, 0, 1, schedule.radii(), w, clip)?;
    Ok(report(
        d.raw,
        Method::Ensemble,
        priors,
        Some(schedule.nodes().alpha()),
        clip,
        d.clamped,
        d.queries,
        w,
        vec![ScheduleSummary::of(1, schedule)],
    ))
}

/// Symmetrized ensemble. `forward` serves the class-2 queries, `reverse`
/// the class-1 queries.
pub fn ensemble_symmetrized_estimate(
    part: &ClassPartition,
    forward: &BandwidthSchedule,
    reverse: &BandwidthSchedule,
    w: &WeightVector,
    clip: ClipBounds,
) -> Result<EstimateReport> {
    require_binary(part)?;
    let priors = estimate_priors(part);
    let (est, clamped) = symmetrize(part, &priors, forward.radii(), reverse.radii(), w, clip)?;
    Ok(report(
        est,
        Method::EnsembleSymmetrized,
        priors,
        Some(forward.nodes().alpha()),
        clip,
        clamped,
        part.total(),
        w,
        vec![
            ScheduleSummary::of(1, forward),
            ScheduleSummary::of(0, reverse),
        ],
    ))
}

/// Multiclass estimate
/// `1 − p_1 − Σ_{l≥2} mean_{X_l} t_l(Û_{1/l}, …, Û_{l−1/l})`.
///
/// `schedules[l − 1]` serves the queries of class `l` (zero-based
/// `l = 1..λ`).
pub fn multiclass_estimate(
    part: &ClassPartition,
    schedules: &[BandwidthSchedule],
    w: &WeightVector,
    clip: ClipBounds,
) -> Result<EstimateReport> {
    let k = part.n_classes();
    if k < 2 {
        return Err(Error::TooFewClasses(k));
    }
    if schedules.len() != k - 1 {
        return Err(Error::LengthMismatch {
            what: "schedules",
            expected: k - 1,
            found: schedules.len(),
        });
    }
    let priors = estimate_priors(part);
    let p = priors.as_slice();
    let mut raw = 1.0 - p[0];
    let mut clamped = 0;
    let mut queries = 0;
    for l in 1..k {
        let earlier: Vec<usize> = (0..l).collect();
        let u = clamped_ratios(part, &earlier, l, schedules[l - 1].radii(), w, clip)?;
        let n = u[0].len();
        let mut x = vec![0.0; l];
        let m = mean((0..n).map(|i| {
            for j in 0..l {
                x[j] = u[j].values()[i];
            }
            multiclass_t(&x, p, l)
        }));
        raw -= m;
        clamped += (0..n).filter(|&i| u.iter().any(|e| e.clamped()[i])).count();
        queries += n;
    }
    let summaries = schedules
        .iter()
        .enumerate()
        .map(|(i, s)| ScheduleSummary::of(i + 1, s))
        .collect();
    Ok(report(
        raw,
        Method::Multiclass,
        priors,
        Some(schedules[0].nodes().alpha()),
        clip,
        clamped,
        queries,
        w,
        summaries,
    ))
}

/// Plug-in estimate of the HP divergence between the two classes.
///
/// The integral `∫ (p_1f_1 − p_2f_2)² / (p_1f_1 + p_2f_2)` is the mixture
/// expectation of `((p_1f_1 − p_2f_2)/(p_1f_1 + p_2f_2))²`, averaged over the
/// pooled sample: class-2 points use `Û = f_1/f_2` from `forward`, class-1
/// points `V̂ = f_2/f_1` from `reverse`. The result is clamped to `[0, 1]`.
pub fn hp_divergence_plugin(
    part: &ClassPartition,
    forward: &BandwidthSchedule,
    reverse: &BandwidthSchedule,
    w: &WeightVector,
    clip: ClipBounds,
) -> Result<f64> {
    require_binary(part)?;
    let priors = estimate_priors(part);
    let (p1, p2) = (priors.get(0), priors.get(1));
    let u = clamped_ratios(part, &[0], 1, forward.radii(), w, clip)?.remove(0);
    let v = clamped_ratios(part, &[1], 0, reverse.radii(), w, clip)?.remove(0);
    let sq = |x: f64| x * x;
    let s2: f64 = u
        .values()
        .iter()
        .map(|&x| sq((p1 * x - p2) / (p1 * x + p2)))
        .sum();
    let s1: f64 = v
        .values()
        .iter()
        .map(|&x| sq((p1 - p2 * x) / (p1 + p2 * x)))
        .sum();
    let integral = (s1 + s2) / part.total() as f64;
    Ok(((integral - sq(p1 - p2)) / (4.0 * p1 * p2)).clamp(0.0, 1.0))
}

/// Bayes error bracket from the HP divergence `D`:
/// `½ − √(4p_1p_2D + (p_1−p_2)²) ≤ E ≤ 2p_1p_2(1 − D)`, both ends clamped
/// into `[0, min(p_1, p_2)]`.
pub fn hp_bounds(d: f64, p1: f64, p2: f64) -> Result<HpBoundReport> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::invalid("divergence", format!("must lie in [0, 1], got {d}")));
    }
    let cap = p1.min(p2);
    let lower = (0.5 - (4.0 * p1 * p2 * d + (p1 - p2).powi(2)).sqrt()).clamp(0.0, cap);
    let upper = (2.0 * p1 * p2 * (1.0 - d)).clamp(0.0, cap);
    Ok(HpBoundReport {
        divergence_estimate: d,
        lower,
        upper,
    })
}
