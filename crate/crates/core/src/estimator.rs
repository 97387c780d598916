//! One-call estimation from a labeled dataset.

use serde::{Deserialize, Serialize};

use crate::bayes_error::{
    base_binary_estimate, ensemble_binary_estimate, ensemble_symmetrized_estimate, hp_bounds,
    hp_divergence_plugin, multiclass_estimate, symmetrized_estimate, EstimateReport,
    HpBoundReport, Method,
};
use crate::data::{partition_by_class, standardize, ClassPartition, LabeledDataset};
use crate::density_ratio::{BandwidthPlan, BandwidthSchedule, ClipBounds};
use crate::error::{Error, Result};
use crate::geometry::{build_index, SpatialIndex};

/// Everything an estimate depends on besides the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub method: Method,
    #[serde(flatten)]
    pub plan: BandwidthPlan,
    pub clip_lo: f64,
    pub standardize: bool,
    /// Radius for the single-bandwidth methods; derived from the data when
    /// unset.
    pub epsilon: Option<f64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            method: Method::Ensemble,
            plan: BandwidthPlan::default(),
            clip_lo: ClipBounds::DEFAULT_LO,
            standardize: false,
            epsilon: None,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        self.plan.validate()?;
        ClipBounds::new(self.clip_lo)?;
        if let Some(e) = self.epsilon {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::invalid("epsilon", format!("must be positive, got {e}")));
            }
        }
        Ok(())
    }

    pub fn clip(&self) -> Result<ClipBounds> {
        ClipBounds::new(self.clip_lo)
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

/// Bayes error estimate plus, for [`Method::HpBounds`], the HP bracket.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    #[serde(flatten)]
    pub report: EstimateReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hp: Option<HpBoundReport>,
}

struct Prepared {
    part: ClassPartition,
    idx: SpatialIndex,
}

impl Prepared {
    fn schedule(
        &self,
        cfg: &EstimatorConfig,
        nodes: crate::chebyshev::NodeSet,
        query: usize,
        basis: usize,
    ) -> Result<BandwidthSchedule> {
        let n = self.part.counts();
        cfg.plan
            .schedule(nodes, &self.idx, self.part.class(query), query, n[basis])
    }

    fn epsilon(&self, cfg: &EstimatorConfig) -> f64 {
        let n = self.part.counts();
        cfg.epsilon
            .unwrap_or_else(|| cfg.plan.base_radius(&self.idx, self.part.class(1), 1, n[0]))
    }
}

/// Runs the configured estimator on `ds`.
///
/// Binary methods read class 1 as the first label and class 2 as the
/// second; the multiclass method orders classes by label id.
pub fn estimate(ds: &LabeledDataset, cfg: &EstimatorConfig) -> Result<Estimate> {
    cfg.validate()?;
    let clip = cfg.clip()?;
    let ds_std;
    let ds = if cfg.standardize && ds.len() >= 2 {
        ds_std = standardize(ds)?.0;
        &ds_std
    } else {
        ds
    };
    let part = partition_by_class(ds);
    let idx = build_index(&part);
    let prep = Prepared { part, idx };
    let part = &prep.part;
    let dim = ds.dim();

    let mut hp = None;
    let mut report = match cfg.method {
        Method::Base => base_binary_estimate(part, prep.epsilon(cfg), clip)?,
        Method::Symmetrized => symmetrized_estimate(part, prep.epsilon(cfg), clip)?,
        Method::Ensemble => {
            let (nodes, w) = cfg.plan.weights(dim)?;
            let s = prep.schedule(cfg, nodes, 1, 0)?;
            ensemble_binary_estimate(part, &s, &w, clip)?
        }
        Method::EnsembleSymmetrized | Method::HpBounds => {
            let (nodes, w) = cfg.plan.weights(dim)?;
            let fwd = prep.schedule(cfg, nodes.clone(), 1, 0)?;
            let rev = prep.schedule(cfg, nodes, 0, 1)?;
            if cfg.method == Method::HpBounds {
                let d = hp_divergence_plugin(part, &fwd, &rev, &w, clip)?;
                let p = crate::data::estimate_priors(part);
                hp = Some(hp_bounds(d, p.get(0), p.get(1))?);
                let mut r = ensemble_binary_estimate(part, &fwd, &w, clip)?;
                r.method = Method::HpBounds;
                r
            } else {
                ensemble_symmetrized_estimate(part, &fwd, &rev, &w, clip)?
            }
        }
        Method::Multiclass => {
            let (nodes, w) = cfg.plan.weights(dim)?;
            let schedules = (1..part.n_classes())
                .map(|l| prep.schedule(cfg, nodes.clone(), l, l))
                .collect::<Result<Vec<_>>>()?;
            multiclass_estimate(part, &schedules, &w, clip)?
        }
    };
    report.label_map = Some(ds.label_map());
    Ok(Estimate { report, hp })
}

/// Shorthand for `estimate(ds, cfg)?.report.estimate`.
pub fn estimate_value(ds: &LabeledDataset, cfg: &EstimatorConfig) -> Result<f64> {
    Ok(estimate(ds, cfg)?.report.estimate)
}
