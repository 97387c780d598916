//! Greedy forward feature selection by estimated Bayes error.

use rayon::prelude::*;
use serde::Serialize;

use crate::bayes_error::Method;
use crate::data::{estimate_priors, partition_by_class, LabeledDataset};
use crate::error::{Error, Result};
use crate::estimator::{estimate_value, EstimatorConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub feature: usize,
    pub ber: f64,
}

/// Features in selection order with the error estimate after each step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionTrace {
    /// Zero-based column indices.
    pub selected: Vec<usize>,
    /// `ber_curve[k]` is the estimate on `selected[..=k]`.
    pub ber_curve: Vec<f64>,
    /// Prior-only error `1 − max p̂` of the empty set.
    pub ber_empty: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_names: Option<Vec<String>>,
    /// Every candidate evaluated at every step.
    pub candidates: Vec<Vec<Candidate>>,
}

/// Estimated Bayes error on the given columns, in the given order.
pub fn subset_ber(ds: &LabeledDataset, columns: &[usize], cfg: &EstimatorConfig) -> Result<f64> {
    if columns.is_empty() {
        return Ok(1.0 - estimate_priors(&partition_by_class(ds)).max());
    }
    estimate_value(&ds.select_features(columns)?, cfg)
}

/// Selects `r` features one at a time, each time adding the unselected
/// column whose inclusion gives the lowest estimate (lowest index on ties).
///
/// Estimates use the multiclass ensemble on the chosen columns, in
/// selection order, with `L = k + 1` for `k` columns unless the config fixes
/// `L`.
pub fn befs_select(ds: &LabeledDataset, r: usize, cfg: &EstimatorConfig) -> Result<SelectionTrace> {
    let d = ds.dim();
    if r < 1 || r > d {
        return Err(Error::invalid("r", format!("must lie in 1..={d}, got {r}")));
    }
    let cfg = cfg.with_method(Method::Multiclass);
    cfg.validate()?;
    let mut selected = Vec::with_capacity(r);
    let mut ber_curve = Vec::with_capacity(r);
    let mut candidates = Vec::with_capacity(r);
    for _ in 0..r {
        let pool: Vec<usize> = (0..d).filter(|j| !selected.contains(j)).collect();
        let scored: Vec<Candidate> = pool
            .par_iter()
            .map(|&j| {
                let mut cols = selected.clone();
                cols.push(j);
                Ok(Candidate {
                    feature: j,
                    ber: subset_ber(ds, &cols, &cfg)?,
                })
            })
            .collect::<Result<_>>()?;
        let best = scored
            .iter()
            .min_by(|a, b| a.ber.total_cmp(&b.ber).then(a.feature.cmp(&b.feature)))
            .expect("pool is nonempty while fewer than d features are selected");
        selected.push(best.feature);
        ber_curve.push(best.ber);
        candidates.push(scored);
    }
    Ok(SelectionTrace {
        ber_empty: subset_ber(ds, &[], &cfg)?,
        feature_names: ds
            .feature_names()
            .map(|n| selected.iter().map(|&j| n[j].clone()).collect()),
        selected,
        ber_curve,
        candidates,
    })
}
