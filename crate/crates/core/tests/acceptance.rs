//! Acceptance checks, one line per criterion. Exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use bayes_bench::bayes_error::{
    base_binary_estimate, hp_bounds, multiclass_estimate, symmetrized_estimate, Method,
};
use bayes_bench::befs::befs_select;
use bayes_bench::chebyshev::{
    chebyshev_roots, chebyshev_weights, least_norm_weights, shifted_chebyshev, NodeSet,
    WeightScheme, WeightVector,
};
use bayes_bench::data::{ClassPartition, Points};
use bayes_bench::datagen::{oracle, DistributionSpec, Family};
use bayes_bench::density_ratio::{BandwidthSchedule, ClipBounds};
use bayes_bench::estimator::{estimate_value, EstimatorConfig};
use bayes_bench::experiments::{
    bounds_comparison, clt_diagnostic, mse_sweep, SweepConfig, DEFAULT_MC_SAMPLES,
};
use bayes_bench::geometry::{brute_force_counts, build_index};
use bayes_bench::stats::{mean, std_dev};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Estimates over `trials` fresh draws with `n` points per class.
fn trial_estimates(spec: &DistributionSpec, n: usize, trials: usize, cfg: &EstimatorConfig) -> Vec<f64> {
    let sweep = SweepConfig::new(spec.clone(), vec![n], trials);
    (0..trials)
        .into_par_iter()
        .map(|t| estimate_value(&sweep.draw(0, t).unwrap(), cfg).unwrap())
        .collect()
}

fn random_partition(rng: &mut ChaCha20Rng, classes: usize, max_n: usize, max_d: usize) -> ClassPartition {
    let d = rng.random_range(1..=max_d);
    let parts = (0..classes)
        .map(|c| {
            let n = rng.random_range(1..=max_n);
            let data = (0..n * d).map(|_| c as f64 * 0.3 + rng.random::<f64>()).collect();
            Points::new(n, d, data).unwrap()
        })
        .collect();
    ClassPartition::from_classes(parts).unwrap()
}

fn c1_weights() -> Outcome {
    let (mut worst_sum, mut worst_res, mut worst_gap) = (0.0f64, 0.0f64, 0.0f64);
    for alpha in [0.3, 0.4, 0.5] {
        for d in 0..=8 {
            for l in d + 1..=12 {
                let w = chebyshev_weights(l, d, alpha).unwrap();
                let nodes = chebyshev_roots(l, alpha).unwrap();
                let ln = least_norm_weights(&nodes, d).unwrap();
                worst_sum = worst_sum.max((w.sum() - 1.0).abs());
                for r in w.moment_residuals(&nodes) {
                    worst_res = worst_res.max(r.abs());
                }
                for (a, b) in w.as_slice().iter().zip(ln.as_slice()) {
                    worst_gap = worst_gap.max((a - b).abs());
                }
            }
        }
    }
    outcome(
        worst_sum <= 1e-10 && worst_res <= 1e-6 && worst_gap <= 1e-8,
        format!("max |sum-1| {worst_sum:.1e}, max moment residual {worst_res:.1e}, max |cheb-leastnorm| {worst_gap:.1e}"),
    )
}

fn c2_orthogonality() -> Outcome {
    let mut worst = 0.0f64;
    for alpha in [0.3, 0.4, 0.5, 1.0] {
        for l in 1..=16 {
            let s = chebyshev_roots(l, alpha).unwrap();
            for j in 0..l {
                for k in 0..l {
                    let sum: f64 = s
                        .nodes()
                        .iter()
                        .map(|&x| shifted_chebyshev(j, alpha, x) * shifted_chebyshev(k, alpha, x))
                        .sum();
                    let want = match (j, k) {
                        (0, 0) => l as f64,
                        _ if j == k => l as f64 / 2.0,
                        _ => 0.0,
                    };
                    worst = worst.max((sum - want).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-9, format!("max deviation {worst:.1e}"))
}

fn c3_geometry() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut mismatches = 0;
    let mut queries = 0;
    for _ in 0..200 {
        let classes = rng.random_range(2..=4);
        let part = random_partition(&mut rng, classes, 500 / classes, 10);
        let idx = build_index(&part);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, p) in part.classes().iter().enumerate() {
            for r in p.rows() {
                rows.push(r.to_vec());
                labels.push(c);
            }
        }
        let all = Points::from_rows(&rows).unwrap();
        for q in 0..5 {
            let center: Vec<f64> = if q == 0 {
                rows[rng.random_range(0..rows.len())].clone()
            } else {
                (0..part.dim()).map(|_| rng.random::<f64>() * 1.6 - 0.3).collect()
            };
            let radius = if q == 1 { 0.0 } else { rng.random::<f64>() * part.dim() as f64 * 0.5 };
            queries += 1;
            if idx.count_within(&center, radius) != brute_force_counts(&all, &labels, classes, &center, radius) {
                mismatches += 1;
            }
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatches in {queries} queries"))
}

fn c4_gaussian() -> Outcome {
    let spec = DistributionSpec::gaussian_shift(10, 5.0, 0).unwrap();
    let truth = oracle(&spec, DEFAULT_MC_SAMPLES).unwrap().bayes_error;
    let m = mean(&trial_estimates(&spec, 1000, 20, &EstimatorConfig::default()));
    outcome((m - truth).abs() <= 0.02, format!("mean {m:.5} vs oracle {truth:.5} (tol 0.02)"))
}

fn c5_null() -> Outcome {
    let spec = DistributionSpec::gaussian_shift(5, 0.0, 0).unwrap();
    let m = mean(&trial_estimates(&spec, 500, 20, &EstimatorConfig::default()));
    outcome((m - 0.5).abs() <= 0.05, format!("mean {m:.4} vs 0.5 (tol 0.05)"))
}

fn c6_mse_trend() -> Outcome {
    let spec = DistributionSpec::gaussian_shift(4, 2.0, 0).unwrap();
    let mut cfg = SweepConfig::new(spec, vec![100, 400, 1600], 20);
    cfg.schemes = vec![WeightScheme::Chebyshev];
    let r = mse_sweep(&cfg).unwrap();
    let mse: Vec<f64> = r.cells.iter().map(|c| c.mse).collect();
    let means: Vec<String> = r.cells.iter().map(|c| format!("{:.4}", c.mean)).collect();
    outcome(
        mse.windows(2).all(|w| w[1] < w[0]),
        format!(
            "MSE at N=100,400,1600: {:.2e}, {:.2e}, {:.2e} (means {}, oracle {:.4})",
            mse[0],
            mse[1],
            mse[2],
            means.join(", "),
            r.oracle.bayes_error
        ),
    )
}

fn c7_multiclass() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let clip = ClipBounds::default();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let part = random_partition(&mut rng, 2, 30, 4);
        let eps = rng.random::<f64>() * 1.5 + 0.05;
        let s = BandwidthSchedule::new(NodeSet::custom(vec![eps]).unwrap(), 1, part.dim(), 1.0).unwrap();
        let m = multiclass_estimate(&part, &[s], &WeightVector::uniform(1), clip).unwrap();
        let b = base_binary_estimate(&part, eps, clip).unwrap();
        worst = worst.max((m.estimate - b.estimate).abs());
    }
    let spec = DistributionSpec::new(
        Family::GaussianShift {
            delta: 0.0,
            sigma: 1.0,
            classes: 3,
        },
        5,
        0,
    )
    .unwrap();
    let cfg = EstimatorConfig::default().with_method(Method::Multiclass);
    let m = mean(&trial_estimates(&spec, 500, 10, &cfg));
    outcome(
        worst <= 1e-12 && (m - 2.0 / 3.0).abs() <= 0.05,
        format!("max |multiclass-base| {worst:.1e}; identical 3-class mean {m:.4} vs 0.6667 (tol 0.05)"),
    )
}

fn c8_rayleigh() -> Outcome {
    let spec = DistributionSpec::new(
        Family::Rayleigh {
            scales: vec![0.7, 1.0, 1.3],
        },
        5,
        0,
    )
    .unwrap();
    let truth = oracle(&spec, DEFAULT_MC_SAMPLES).unwrap();
    let cfg = EstimatorConfig::default().with_method(Method::Multiclass);
    let m = mean(&trial_estimates(&spec, 2000, 10, &cfg));
    outcome(
        (m - truth.bayes_error).abs() <= 0.05,
        format!(
            "mean {m:.4} vs MC oracle {:.4} (se {:.1e}, tol 0.05)",
            truth.bayes_error,
            truth.std_error.unwrap_or(0.0)
        ),
    )
}

fn c9_hp_bracket() -> Outcome {
    let spec = DistributionSpec::gaussian_shift(10, 5.0, 0).unwrap();
    let t = bounds_comparison(&SweepConfig::new(spec, vec![2000], 20)).unwrap();
    let row = t.rows[0];
    let zero = hp_bounds(0.0, 0.5, 0.5).unwrap();
    let one = hp_bounds(1.0, 0.5, 0.5).unwrap();
    let ends = (zero.lower, zero.upper) == (0.5, 0.5) && (one.lower, one.upper) == (0.0, 0.0);
    outcome(
        row.bracketed >= 0.8 && ends,
        format!(
            "bracketed in {:.0}% of trials (mean lower {:.4}, estimate {:.4}, upper {:.4}); endpoints exact: {ends}",
            row.bracketed * 100.0,
            row.hp_lower,
            row.estimate,
            row.hp_upper
        ),
    )
}

fn c10_clt() -> Outcome {
    let spec = DistributionSpec::gaussian_shift(2, 2.0, 0).unwrap();
    let r = clt_diagnostic(&spec, 500, 200, &EstimatorConfig::default(), 0).unwrap();
    outcome(r.pass, format!("KS {:.4}, p-value {:.3} (level 0.01)", r.ks_statistic, r.p_value))
}

fn c11_befs() -> Outcome {
    const INFORMATIVE: usize = 3;
    let spec = DistributionSpec::gaussian_shift(5, 3.0, 0).unwrap();
    let sweep = SweepConfig::new(spec, vec![500], 20);
    // move the shifted axis 0 to column 3
    let order = [1, 2, 3, 0, 4];
    let traces: Vec<_> = (0..20)
        .into_par_iter()
        .map(|t| {
            let ds = sweep.draw(0, t).unwrap().select_features(&order).unwrap();
            befs_select(&ds, 5, &EstimatorConfig::default()).unwrap()
        })
        .collect();
    let first = traces.iter().filter(|t| t.selected[0] == INFORMATIVE).count();
    let steps: Vec<Vec<f64>> = (0..5)
        .map(|k| traces.iter().map(|t| t.ber_curve[k]).collect())
        .collect();
    let curve: Vec<f64> = steps.iter().map(|v| mean(v)).collect();
    let monotone = (1..5).all(|k| curve[k] <= curve[k - 1] + std_dev(&steps[k]));
    let shown: Vec<String> = curve.iter().map(|v| format!("{v:.4}")).collect();
    outcome(
        first as f64 >= 0.95 * 20.0 && monotone,
        format!("informative first in {first}/20 draws; mean curve [{}]", shown.join(", ")),
    )
}

fn c12_symmetrization() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let clip = ClipBounds::default();
    let (mut worst_id, mut worst_swap) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let part = random_partition(&mut rng, 2, 30, 4);
        let eps = rng.random::<f64>() * 1.5 + 0.05;
        let n = part.counts();
        let total = part.total() as f64;
        let fwd = base_binary_estimate(&part, eps, clip).unwrap().estimate;
        let rev = base_binary_estimate(&part.swapped(0, 1), eps, clip).unwrap().estimate;
        let sym = symmetrized_estimate(&part, eps, clip).unwrap().estimate;
        let swapped = symmetrized_estimate(&part.swapped(0, 1), eps, clip).unwrap().estimate;
        let combo = n[1] as f64 / total * fwd + n[0] as f64 / total * rev;
        worst_id = worst_id.max((sym - combo).abs());
        worst_swap = worst_swap.max((sym - swapped).abs());
    }
    outcome(
        worst_id <= 1e-12 && worst_swap <= 1e-12,
        format!("max |sym-combination| {worst_id:.1e}, max |sym-relabeled| {worst_swap:.1e}"),
    )
}

fn c13_concentric() -> Outcome {
    let spec = DistributionSpec::new(Family::Concentric { classes: 4 }, 2, 0).unwrap();
    let cfg = EstimatorConfig::default().with_method(Method::Multiclass);
    let small = mean(&trial_estimates(&spec, 250, 10, &cfg));
    let large = mean(&trial_estimates(&spec, 1000, 10, &cfg));
    outcome(
        large <= 0.2 && large < small,
        format!("mean at N=1000: {small:.4}, at N=4000: {large:.4} (need <= 0.2 and decreasing)"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("weight correctness", c1_weights),
        ("discrete orthogonality", c2_orthogonality),
        ("geometry oracle equivalence", c3_geometry),
        ("binary Gaussian accuracy", c4_gaussian),
        ("null case", c5_null),
        ("MSE convergence trend", c6_mse_trend),
        ("multiclass consistency", c7_multiclass),
        ("multiclass Rayleigh", c8_rayleigh),
        ("HP bracket", c9_hp_bracket),
        ("CLT diagnostic", c10_clt),
        ("BEFS sanity", c11_befs),
        ("symmetrization identity", c12_symmetrization),
        ("concentric oracle", c13_concentric),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<28} {}  {} [{:.1}s]",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
