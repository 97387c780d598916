//! ε-ball density-ratio estimates and their weighted ensembles.
//!
//! At a query point `x` of class `b`, the ratio `f_a(x) / f_b(x)` is
//! estimated by
//!
//! ```text
//! Û(x) = (N_b / N_a) · count_a(x, ε) / count_b(x, ε)
//! ```
//!
//! where `count_b` includes `x` itself, so the denominator is never zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{NodeSet, WeightScheme, WeightVector};
use crate::data::Points;
use crate::error::{Error, Result};
use crate::geometry::SpatialIndex;

/// Feasible ratio interval `[lo, 1/lo]` implied by bounded class densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipBounds {
    lo: f64,
}

impl ClipBounds {
    pub const DEFAULT_LO: f64 = 1e-3;

    pub fn new(lo: f64) -> Result<Self> {
        if !(lo > 0.0 && lo <= 1.0) {
            return Err(Error::invalid("clip_lo", format!("must lie in (0, 1], got {lo}")));
        }
        Ok(Self { lo })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        1.0 / self.lo
    }

    /// Clamped value and whether clamping changed it.
    #[inline]
    pub fn clamp(&self, x: f64) -> (f64, bool) {
        if x < self.lo {
            (self.lo, true)
        } else if x > self.hi() {
            (self.hi(), true)
        } else {
            (x, false)
        }
    }
}

impl Default for ClipBounds {
    fn default() -> Self {
        Self {
            lo: Self::DEFAULT_LO,
        }
    }
}

impl Serialize for ClipBounds {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ClipBounds", 2)?;
        st.serialize_field("ratio_lo", &self.lo)?;
        st.serialize_field("ratio_hi", &self.hi())?;
        st.end()
    }
}

/// Unit of length the bandwidth nodes are measured in.
///
/// With `Fixed(1.0)` the radii are `ξ_l · N^(−1/(2d))` in raw coordinates.
/// `Calibrated` instead sizes the smallest ball to hold about `κ√N_b`
/// same-class neighbors of a typical query point, and scales the other
/// radii proportionally to their nodes. Because the moment constraints are
/// scale-free, the weights stay valid under either unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    Fixed(f64),
    Calibrated { kappa: f64 },
}

impl LengthUnit {
    pub const DEFAULT_KAPPA: f64 = 3.0;

    pub fn validate(&self) -> Result<()> {
        match *self {
            LengthUnit::Fixed(u) if !(u.is_finite() && u > 0.0) => {
                Err(Error::invalid("length_unit", format!("must be positive, got {u}")))
            }
            LengthUnit::Calibrated { kappa } if !(kappa.is_finite() && kappa > 0.0) => {
                Err(Error::invalid("kappa", format!("must be positive, got {kappa}")))
            }
            _ => Ok(()),
        }
    }
}

impl Default for LengthUnit {
    fn default() -> Self {
        LengthUnit::Calibrated {
            kappa: Self::DEFAULT_KAPPA,
        }
    }
}

/// Radii `ε_l = ξ_l · N_basis^(−1/(2d)) · unit`, in node order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthSchedule {
    nodes: NodeSet,
    n_basis: usize,
    dim: usize,
    unit: f64,
    radii: Vec<f64>,
}

impl BandwidthSchedule {
    pub fn new(nodes: NodeSet, n_basis: usize, dim: usize, unit: f64) -> Result<Self> {
        if n_basis == 0 || dim == 0 {
            return Err(Error::invalid("schedule", "sample size and dimension must be positive"));
        }
        if !(unit.is_finite() && unit > 0.0) {
            return Err(Error::invalid("length_unit", format!("must be positive, got {unit}")));
        }
        let shrink = (n_basis as f64).powf(-1.0 / (2.0 * dim as f64));
        let radii = nodes.nodes().iter().map(|&x| x * shrink * unit).collect();
        Ok(Self {
            nodes,
            n_basis,
            dim,
            unit,
            radii,
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn unit(&self) -> f64 {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

/// Median over the points of class `class` of the distance to their
/// `k`-th nearest other point of the same class, with `k = ⌈κ√N⌉` capped
/// at `N − 1`. Returns `None` when the class has a single point or every
/// such distance is zero.
pub fn neighbor_scale(idx: &SpatialIndex, points: &Points, class: usize, kappa: f64) -> Option<f64> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let k = ((kappa * (n as f64).sqrt()).ceil() as usize).clamp(1, n - 1);
    let mut dist: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            idx.kth_neighbor_distance(points.row(i), k + 1, class)
                .expect("class holds at least k + 1 points")
        })
        .collect();
    dist.sort_by(f64::total_cmp);
    let med = if n % 2 == 1 {
        dist[n / 2]
    } else {
        0.5 * (dist[n / 2 - 1] + dist[n / 2])
    };
    if med > 0.0 {
        Some(med)
    } else {
        dist.into_iter().find(|&x| x > 0.0)
    }
}

/// How bandwidth schedules and weights are derived for a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthPlan {
    pub scheme: WeightScheme,
    pub alpha: f64,
    /// Ensemble size; `None` means `d + 1`.
    pub l: Option<usize>,
    pub unit: LengthUnit,
}

impl Default for BandwidthPlan {
    fn default() -> Self {
        Self {
            scheme: WeightScheme::Chebyshev,
            alpha: 0.4,
            l: None,
            unit: LengthUnit::default(),
        }
    }
}

impl BandwidthPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::invalid("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if self.l == Some(0) {
            return Err(Error::invalid("L", "must be at least 1"));
        }
        self.unit.validate()
    }

    pub fn ensemble_len(&self, dim: usize) -> usize {
        self.l.unwrap_or(dim + 1)
    }

    /// Nodes and weights for data of dimension `dim`. An ensemble shorter
    /// than `dim + 1` cancels as many moments as it can (`L − 1`).
    pub fn weights(&self, dim: usize) -> Result<(NodeSet, WeightVector)> {
        self.validate()?;
        let l = self.ensemble_len(dim);
        self.scheme.build(l, dim.min(l - 1), self.alpha)
    }

    /// Schedule for queries of class `query_class`, whose points are
    /// `queries`.
    pub fn schedule(
        &self,
        nodes: NodeSet,
        idx: &SpatialIndex,
        queries: &Points,
        query_class: usize,
        n_basis: usize,
    ) -> Result<BandwidthSchedule> {
        let dim = idx.dim();
        let unit = match self.unit {
            LengthUnit::Fixed(u) => u,
            LengthUnit::Calibrated { kappa } => {
                match neighbor_scale(idx, queries, query_class, kappa) {
                    Some(r) => {
                        let shrink = (n_basis as f64).powf(-1.0 / (2.0 * dim as f64));
                        r / (nodes.min() * shrink)
                    }
                    None => 1.0,
                }
            }
        };
        BandwidthSchedule::new(nodes, n_basis, dim, unit)
    }

    /// Default radius of the single-bandwidth estimator:
    /// `α · N^(−1/(1+d))` in a fixed unit, or the calibrated neighbor scale.
    pub fn base_radius(
        &self,
        idx: &SpatialIndex,
        queries: &Points,
        query_class: usize,
        n_basis: usize,
    ) -> f64 {
        let fixed = |u: f64| self.alpha * (n_basis as f64).powf(-1.0 / (1.0 + idx.dim() as f64)) * u;
        match self.unit {
            LengthUnit::Fixed(u) => fixed(u),
            LengthUnit::Calibrated { kappa } => {
                neighbor_scale(idx, queries, query_class, kappa).unwrap_or_else(|| fixed(1.0))
            }
        }
    }
}

/// Ratio values at the query points of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRatioEstimate {
    values: Vec<f64>,
    query_class: usize,
    numerator_class: usize,
    clamped: Vec<bool>,
}

impl DensityRatioEstimate {
    pub fn new(values: Vec<f64>, numerator_class: usize, query_class: usize) -> Self {
        let n = values.len();
        Self {
            values,
            query_class,
            numerator_class,
            clamped: vec![false; n],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn clamped(&self) -> &[bool] {
        &self.clamped
    }

    pub fn query_class(&self) -> usize {
        self.query_class
    }

    pub fn numerator_class(&self) -> usize {
        self.numerator_class
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn clamped_fraction(&self) -> f64 {
        if self.clamped.is_empty() {
            return 0.0;
        }
        self.clamped.iter().filter(|&&c| c).count() as f64 / self.clamped.len() as f64
    }
}

/// Per-class neighbor counts of a set of query points at several radii.
#[derive(Debug, Clone)]
pub struct NeighborCounts {
    n_query: usize,
    n_radii: usize,
    n_classes: usize,
    totals: Vec<usize>,
    /// `(query * n_radii + radius) * n_classes + class`
    counts: Vec<u32>,
}

/// Counts every class around every query point at every radius. Radii may
/// be in any order.
pub fn neighbor_counts(idx: &SpatialIndex, queries: &Points, radii: &[f64]) -> NeighborCounts {
    let k = idx.n_classes();
    let m = radii.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| radii[i]).collect();
    let mut counts = vec![0u32; queries.len() * m * k];
    if m > 0 && k > 0 {
        counts
            .par_chunks_mut(m * k)
            .enumerate()
            .for_each_init(
                || vec![0usize; m * k],
                |buf, (q, out)| {
                    idx.count_within_radii(queries.row(q), &sorted, buf);
                    for (s, &orig) in order.iter().enumerate() {
                        for c in 0..k {
                            out[orig * k + c] = buf[s * k + c] as u32;
                        }
                    }
                },
            );
    }
    NeighborCounts {
        n_query: queries.len(),
        n_radii: m,
        n_classes: k,
        totals: idx.class_totals().to_vec(),
        counts,
    }
}

impl NeighborCounts {
    pub fn n_query(&self) -> usize {
        self.n_query
    }

    pub fn n_radii(&self) -> usize {
        self.n_radii
    }

    pub fn count(&self, query: usize, radius: usize, class: usize) -> usize {
        self.counts[(query * self.n_radii + radius) * self.n_classes + class] as usize
    }

    /// `(N_b/N_a) · count_a / count_b` at one query point and radius.
    #[inline]
    pub fn ratio(&self, query: usize, radius: usize, a: usize, b: usize) -> f64 {
        let ca = self.count(query, radius, a) as f64;
        let cb = self.count(query, radius, b) as f64;
        let (na, nb) = (self.totals[a] as f64, self.totals[b] as f64);
        nb * ca / (na * cb)
    }

    pub fn ratio_estimate(&self, radius: usize, a: usize, b: usize) -> DensityRatioEstimate {
        let values = (0..self.n_query).map(|q| self.ratio(q, radius, a, b)).collect();
        DensityRatioEstimate::new(values, a, b)
    }
}

/// Ratio `f_a / f_b` at each of `queries` (the class-`b` sample) from balls
/// of radius `radius`.
pub fn eps_ball_ratio(
    idx: &SpatialIndex,
    queries: &Points,
    num_class: usize,
    denom_class: usize,
    radius: f64,
) -> DensityRatioEstimate {
    neighbor_counts(idx, queries, &[radius]).ratio_estimate(0, num_class, denom_class)
}

/// `Σ_l w_l Û_l` at each query point, without flooring.
pub fn weighted_sum(base: &[DensityRatioEstimate], w: &WeightVector) -> Result<Vec<f64>> {
    if base.len() != w.len() {
        return Err(Error::LengthMismatch {
            what: "ensemble weights",
            expected: base.len(),
            found: w.len(),
        });
    }
    let n = base.first().map_or(0, |b| b.len());
    if let Some(b) = base.iter().find(|b| b.len() != n) {
        return Err(Error::LengthMismatch {
            what: "base estimate",
            expected: n,
            found: b.len(),
        });
    }
    Ok((0..n)
        .map(|i| {
            base.iter()
                .zip(w.as_slice())
                .map(|(b, wl)| wl * b.values[i])
                .sum()
        })
        .collect())
}

/// Weighted ensemble of base estimates over one query set. Negative
/// combinations are floored at zero.
pub fn ensemble_ratio(base: &[DensityRatioEstimate], w: &WeightVector) -> Result<DensityRatioEstimate> {
    let values = weighted_sum(base, w)?.into_iter().map(|v| v.max(0.0)).collect();
    let (a, b) = base
        .first()
        .map_or((0, 0), |e| (e.numerator_class, e.query_class));
    Ok(DensityRatioEstimate::new(values, a, b))
}

/// Clamps every value into `[lo, 1/lo]`, recording where it fired.
pub fn clip_ratio(est: &DensityRatioEstimate, bounds: ClipBounds) -> DensityRatioEstimate {
    let (values, clamped) = est.values.iter().map(|&v| bounds.clamp(v)).unzip();
    DensityRatioEstimate {
        values,
        clamped,
        ..est.clone()
    }
}
