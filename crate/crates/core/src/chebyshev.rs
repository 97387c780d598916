//! Bandwidth nodes and ensemble weights.
//!
//! Weights solve the least-norm problem
//!
//! ```text
//! minimize ||w||₂  subject to  Σ w_l = 1,  Σ w_l ξ_l^i = 0  (i = 1..d)
//! ```
//!
//! which removes the first `d` bias terms of the base estimator. On the
//! roots of the shifted Chebyshev polynomial the solution has a closed form
//! ([`chebyshev_weights`]); for any other node set use
//! [`least_norm_weights`].

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Powers above this are not checked by [`WeightVector::moment_residuals`]:
/// `ξ^i` for `ξ < 0.5` underflows toward zero and the residual stops
/// carrying information.
pub const MAX_CHECKED_POWER: usize = 12;

/// `T_n(2x/α − 1)`, evaluated with the three-term recurrence.
pub fn shifted_chebyshev(n: usize, alpha: f64, x: f64) -> f64 {
    let y = 2.0 * x / alpha - 1.0;
    let (mut prev, mut cur) = (1.0, y);
    match n {
        0 => 1.0,
        1 => y,
        _ => {
            for _ in 1..n {
                let next = 2.0 * y * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Chebyshev,
    Arithmetic,
    Custom,
}

/// Bandwidth multipliers `ξ_1..ξ_L` on the scale `α`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeSet {
    nodes: Vec<f64>,
    alpha: f64,
    kind: NodeKind,
}

impl NodeSet {
    /// Arbitrary positive, distinct nodes. The scale is the largest node.
    pub fn custom(nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("nodes", "need at least one node"));
        }
        if nodes.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::invalid("nodes", "nodes must be positive and finite"));
        }
        let alpha = nodes.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            nodes,
            alpha,
            kind: NodeKind::Custom,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn min(&self) -> f64 {
        self.nodes.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn check_shape(l: usize, alpha: f64) -> Result<()> {
    if l == 0 {
        return Err(Error::invalid("L", "must be at least 1"));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid("alpha", format!("must be positive, got {alpha}")));
    }
    Ok(())
}

/// Roots `s_k = (α/2)cos((k+½)π/L) + α/2`, `k = 0..L−1`, all in `(0, α)`.
pub fn chebyshev_roots(l: usize, alpha: f64) -> Result<NodeSet> {
    check_shape(l, alpha)?;
    let nodes = (0..l)
        .map(|k| 0.5 * alpha * ((k as f64 + 0.5) * PI / l as f64).cos() + 0.5 * alpha)
        .collect();
    Ok(NodeSet {
        nodes,
        alpha,
        kind: NodeKind::Chebyshev,
    })
}

/// Evenly spaced nodes `α·l/L`, `l = 1..L`.
pub fn arithmetic_nodes(l: usize, alpha: f64) -> Result<NodeSet> {
    check_shape(l, alpha)?;
    let nodes = (1..=l).map(|i| alpha * i as f64 / l as f64).collect();
    Ok(NodeSet {
        nodes,
        alpha,
        kind: NodeKind::Arithmetic,
    })
}

/// Ensemble weights together with the number of moment constraints they
/// were built for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    weights: Vec<f64>,
    d_constraint: usize,
}

impl WeightVector {
    /// Wraps explicit weights; they must sum to 1 within `1e-10`.
    pub fn new(weights: Vec<f64>, d_constraint: usize) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if weights.is_empty() || (s - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("weights", format!("must sum to 1, got {s}")));
        }
        Ok(Self {
            weights,
            d_constraint,
        })
    }

    pub fn uniform(l: usize) -> Self {
        Self {
            weights: vec![1.0 / l as f64; l],
            d_constraint: 0,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn d_constraint(&self) -> usize {
        self.d_constraint
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// `Σ w_l ξ_l^i` for `i = 1..=min(d_constraint, 12)`.
    pub fn moment_residuals(&self, nodes: &NodeSet) -> Vec<f64> {
        (1..=self.d_constraint.min(MAX_CHECKED_POWER))
            .map(|i| {
                self.weights
                    .iter()
                    .zip(nodes.nodes())
                    .map(|(w, x)| w * x.powi(i as i32))
                    .sum()
            })
            .collect()
    }
}

fn check_dof(l: usize, d: usize) -> Result<()> {
    if l <= d {
        return Err(Error::invalid(
            "L",
            format!("need more nodes than constraints (L = {l}, d = {d})"),
        ));
    }
    Ok(())
}

/// Closed-form optimal weights on the Chebyshev roots:
/// `w_i = (2/L) Σ_{k=0}^{d} T^α_k(0) T^α_k(s_i) − 1/L`.
pub fn chebyshev_weights(l: usize, d: usize, alpha: f64) -> Result<WeightVector> {
    check_dof(l, d)?;
    let roots = chebyshev_roots(l, alpha)?;
    let lf = l as f64;
    let weights = roots
        .nodes()
        .iter()
        .map(|&s| {
            let y = 2.0 * s / alpha - 1.0;
            // T_k(−1) = (−1)^k, so accumulate with alternating sign
            let (mut prev, mut cur) = (1.0, y);
            let mut acc = 1.0;
            for k in 1..=d {
                if k > 1 {
                    let next = 2.0 * y * cur - prev;
                    prev = cur;
                    cur = next;
                }
                acc += if k % 2 == 0 { cur } else { -cur };
            }
            2.0 / lf * acc - 1.0 / lf
        })
        .collect();
    Ok(WeightVector {
        weights,
        d_constraint: d,
    })
}

/// Minimum-norm weights satisfying the moment constraints on arbitrary
/// nodes.
///
/// The constraint rows are written in a Legendre basis on `[0, max ξ]`
/// (an invertible row transform of the monomial system, so the solution
/// set is the same) and solved with an SVD pseudo-inverse. Reliable up to
/// `d` around 15.
pub fn least_norm_weights(nodes: &NodeSet, d: usize) -> Result<WeightVector> {
    let l = nodes.len();
    check_dof(l, d)?;
    let mut sorted = nodes.nodes().to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::RankDeficient {
            rank: {
                sorted.dedup();
                sorted.len().min(d + 1)
            },
            rows: d + 1,
        });
    }
    let scale = nodes.alpha();
    let rows = d + 1;
    let mut a = DMatrix::<f64>::zeros(rows, l);
    for (j, &x) in nodes.nodes().iter().enumerate() {
        let y = 2.0 * x / scale - 1.0;
        let (mut prev, mut cur) = (1.0, y);
        a[(0, j)] = 1.0;
        if rows > 1 {
            a[(1, j)] = y;
        }
        for k in 1..rows.saturating_sub(1) {
            let kf = k as f64;
            let next = ((2.0 * kf + 1.0) * y * cur - kf * prev) / (kf + 1.0);
            prev = cur;
            cur = next;
            a[(k + 1, j)] = cur;
        }
    }
    // P_k(−1) = (−1)^k at ξ = 0
    let b = DVector::from_fn(rows, |k, _| if k % 2 == 0 { 1.0 } else { -1.0 });

    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * 1e-13 * l as f64;
    let rank = svd.rank(tol);
    if rank < rows {
        return Err(Error::RankDeficient { rank, rows });
    }
    let w = svd
        .solve(&b, tol)
        .map_err(|e| Error::invalid("nodes", e.to_string()))?;
    Ok(WeightVector {
        weights: w.iter().copied().collect(),
        d_constraint: d,
    })
}

/// How the ensemble nodes are placed and weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    /// Arithmetic nodes, equal weights `1/L`.
    Uniform,
    /// Arithmetic nodes, least-norm weights.
    Arithmetic,
    /// Chebyshev roots, closed-form weights.
    #[default]
    Chebyshev,
}

impl WeightScheme {
    pub const ALL: [WeightScheme; 3] = [Self::Uniform, Self::Arithmetic, Self::Chebyshev];

    pub fn name(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Arithmetic => "arithmetic",
            Self::Chebyshev => "chebyshev",
        }
    }

    pub fn nodes(self, l: usize, alpha: f64) -> Result<NodeSet> {
        match self {
            Self::Uniform | Self::Arithmetic => arithmetic_nodes(l, alpha),
            Self::Chebyshev => chebyshev_roots(l, alpha),
        }
    }

    /// Nodes and weights for an `L`-point ensemble cancelling `d` moments.
    /// `d` is ignored by the uniform scheme.
    pub fn build(self, l: usize, d: usize, alpha: f64) -> Result<(NodeSet, WeightVector)> {
        let nodes = self.nodes(l, alpha)?;
        let w = match self {
            Self::Uniform => WeightVector::uniform(l),
            Self::Arithmetic => least_norm_weights(&nodes, d)?,
            Self::Chebyshev => chebyshev_weights(l, d, alpha)?,
        };
        Ok((nodes, w))
    }
}

impl std::fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Self::Uniform),
            "arithmetic" => Ok(Self::Arithmetic),
            "chebyshev" => Ok(Self::Chebyshev),
            _ => Err(Error::invalid(
                "scheme",
                format!("{s:?} is not one of uniform, arithmetic, chebyshev"),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn shifted_chebyshev_values() {
        assert_eq!(shifted_chebyshev(0, 0.3, 17.0), 1.0);
        assert_eq!(shifted_chebyshev(1, 1.0, 0.5), 0.0);
        assert_eq!(shifted_chebyshev(2, 2.0, 2.0), 1.0);
        // T_3(y) = 4y³ − 3y
        let y: f64 = 0.3;
        assert!(close(shifted_chebyshev(3, 2.0, 1.3), 4.0 * y.powi(3) - 3.0 * y, 1e-15));
    }

    #[test]
    fn roots() {
        assert_eq!(chebyshev_roots(1, 1.0).unwrap().nodes(), &[0.5]);
        let r = chebyshev_roots(2, 1.0).unwrap();
        assert!(close(r.nodes()[0], 0.853_553_390_593_273_7, 1e-15));
        assert!(close(r.nodes()[1], 0.146_446_609_406_726_24, 1e-15));
        for l in 1..=16 {
            for alpha in [0.3, 0.4, 0.5, 1.0] {
                for &s in chebyshev_roots(l, alpha).unwrap().nodes() {
                    assert!(s > 0.0 && s < alpha);
                    assert!(shifted_chebyshev(l, alpha, s).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn weights_hand_values() {
        for l in 1..6 {
            let w = chebyshev_weights(l, 0, 0.4).unwrap();
            assert!(w.as_slice().iter().all(|&x| close(x, 1.0 / l as f64, 1e-15)));
        }
        let w = chebyshev_weights(2, 1, 1.0).unwrap();
        assert!(close(w.as_slice()[0], -0.207_106_781_186_547_5, 1e-12));
        assert!(close(w.as_slice()[1], 1.207_106_781_186_547_5, 1e-12));
        assert!(close(w.sum(), 1.0, 1e-12));
        assert!(w.moment_residuals(&chebyshev_roots(2, 1.0).unwrap())[0].abs() < 1e-12);
    }

    #[test]
    fn l_must_exceed_d() {
        assert!(chebyshev_weights(3, 3, 0.4).is_err());
        let nodes = arithmetic_nodes(2, 1.0).unwrap();
        assert!(least_norm_weights(&nodes, 2).is_err());
    }

    #[test]
    fn least_norm_hand_values() {
        let w = least_norm_weights(&NodeSet::custom(vec![1.0, 2.0]).unwrap(), 1).unwrap();
        assert!(close(w.as_slice()[0], 2.0, 1e-12));
        assert!(close(w.as_slice()[1], -1.0, 1e-12));

        let w = least_norm_weights(&NodeSet::custom(vec![1.0, 2.0, 3.0]).unwrap(), 1).unwrap();
        for (a, b) in w.as_slice().iter().zip([4.0 / 3.0, 1.0 / 3.0, -2.0 / 3.0]) {
            assert!(close(*a, b, 1e-12));
        }
        assert!(close(w.norm().powi(2), 21.0 / 9.0, 1e-12));
    }

    #[test]
    fn duplicate_nodes_rejected() {
        let nodes = NodeSet::custom(vec![0.1, 0.2, 0.2]).unwrap();
        assert!(matches!(
            least_norm_weights(&nodes, 2),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn closed_form_matches_solver() {
        for alpha in [0.3, 0.4, 0.5, 1.0] {
            for d in 0..=8 {
                for l in d + 1..=12 {
                    let cw = chebyshev_weights(l, d, alpha).unwrap();
                    let nodes = chebyshev_roots(l, alpha).unwrap();
                    let lw = least_norm_weights(&nodes, d).unwrap();
                    for (a, b) in cw.as_slice().iter().zip(lw.as_slice()) {
                        assert!(close(*a, *b, 1e-8), "L={l} d={d} α={alpha}: {a} vs {b}");
                    }
                    assert!(cw.norm() <= lw.norm() + 1e-8);
                }
            }
        }
    }

    #[test]
    fn arithmetic_weights_satisfy_constraints() {
        for d in 0..=8 {
            let (nodes, w) = WeightScheme::Arithmetic.build(d + 1, d, 0.4).unwrap();
            assert!(close(w.sum(), 1.0, 1e-10));
            assert!(w.moment_residuals(&nodes).iter().all(|r| r.abs() <= 1e-6));
        }
    }

    #[test]
    fn uniform_scheme() {
        let (nodes, w) = WeightScheme::Uniform.build(4, 3, 0.4).unwrap();
        assert_eq!(w.as_slice(), &[0.25; 4]);
        assert!(close(nodes.nodes()[3], 0.4, 1e-15));
        assert!(close(nodes.nodes()[0], 0.1, 1e-15));
    }

    #[test]
    fn scheme_parse_roundtrip() {
        for s in WeightScheme::ALL {
            assert_eq!(s.name().parse::<WeightScheme>().unwrap(), s);
        }
        assert!("simpson".parse::<WeightScheme>().is_err());
    }
}
