//! Outlier detection against a clean reference sample.
//!
//! Solve truncated-cost transport from the contaminated sample to the
//! reference, reconstruct the source slack `s₁`, and flag every point whose
//! adjusted mass `μ(i) + s₁(i)` falls below a threshold: an exact solver
//! drives eliminated points to zero (up to LP arithmetic), an entropic one
//! only near it — hence the `1/n²` threshold for the Sinkhorn path.

use ndarray::Array1;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cost::{validate_lambda, CostMatrix, CostSpec};
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::reconstruct::slacks_only;
use crate::sinkhorn::{sinkhorn_solve, SinkhornOptions};
use crate::transport::solve_transport;

/// Plan entries above this count as "matched" for the λ heuristic.
pub const PLAN_SUPPORT_TOL: f64 = 1e-12;
/// Threshold on μ + s₁ for the exact solver (LP arithmetic noise).
pub const EXACT_THRESHOLD: f64 = 1e-9;
/// Smallest λ the heuristic will return.
pub const LAMBDA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectMethod {
    Exact,
    Sinkhorn,
}

#[derive(Debug, Clone)]
pub struct DetectOptions {
    pub method: DetectMethod,
    /// Entropic regularization; required for the Sinkhorn method.
    pub alpha: Option<f64>,
    /// Override of the flagging threshold (defaults: 1e-9 exact, 1/n² Sinkhorn).
    pub threshold: Option<f64>,
    pub sinkhorn_tol: f64,
    pub sinkhorn_max_iter: usize,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            method: DetectMethod::Exact,
            alpha: None,
            threshold: None,
            sinkhorn_tol: 1e-8,
            sinkhorn_max_iter: 10_000,
        }
    }
}

impl DetectOptions {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn sinkhorn(alpha: f64) -> Self {
        Self {
            method: DetectMethod::Sinkhorn,
            alpha: Some(alpha),
            ..Self::default()
        }
    }
}

/// Outcome of one detection run. Every reported index `i` satisfies
/// `μ(i) + s₁(i) < threshold`; indices are 0-based and sorted.
#[derive(Debug, Clone)]
pub struct DetectionResult {
    pub outlier_indices: Vec<usize>,
    pub slack: Array1<f64>,
    pub lambda: f64,
    pub method: DetectMethod,
    pub threshold: f64,
}

/// Flags likely outliers in `contaminated` using `clean` as the reference.
pub fn detect_outliers(
    contaminated: &DiscreteMeasure,
    clean: &DiscreteMeasure,
    spec: CostSpec,
    lambda: f64,
    opts: &DetectOptions,
) -> Result<DetectionResult> {
    validate_lambda(lambda)?;
    let cost = CostMatrix::from_points(contaminated.points(), clean.points(), spec)?;
    let truncated = cost.truncate(lambda)?;

    let plan = match opts.method {
        DetectMethod::Exact => solve_transport(contaminated, clean, &truncated)?.0,
        DetectMethod::Sinkhorn => {
            let alpha = opts.alpha.ok_or(Error::InvalidAlpha(f64::NAN))?;
            let sopts = SinkhornOptions {
                alpha,
                tol: opts.sinkhorn_tol,
                max_iter: opts.sinkhorn_max_iter,
                epsilon_scaling: false,
            };
            sinkhorn_solve(contaminated, clean, &truncated, &sopts)?.0
        }
    };

    let (s1, _) = slacks_only(&plan, &cost, lambda)?;
    let n = contaminated.len();
    let threshold = opts.threshold.unwrap_or(match opts.method {
        DetectMethod::Exact => EXACT_THRESHOLD,
        DetectMethod::Sinkhorn => 1.0 / (n * n) as f64,
    });
    let outlier_indices = (0..n)
        .filter(|&i| contaminated.weights()[i] + s1[i] < threshold)
        .collect();

    Ok(DetectionResult {
        outlier_indices,
        slack: s1,
        lambda,
        method: opts.method,
        threshold,
    })
}

/// λ heuristic: vanilla OT between two disjoint subsamples of the clean
/// data, `2λ` = the given percentile of costs on the plan support, λ floored
/// at [`LAMBDA_FLOOR`]. Percentile 100 is the maximum matched cost.
pub fn select_lambda(
    clean: &DiscreteMeasure,
    subsample_size: usize,
    percentile: f64,
    spec: CostSpec,
    seed: u64,
) -> Result<f64> {
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(Error::InvalidPercentile(percentile));
    }
    let n = clean.len();
    if subsample_size == 0 || 2 * subsample_size > n {
        return Err(Error::SubsampleTooLarge {
            requested: subsample_size,
            available: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, n, 2 * subsample_size).into_vec();
    let rows = |idx: &[usize]| {
        let mut pts = ndarray::Array2::<f64>::zeros((idx.len(), clean.dim()));
        for (r, &i) in idx.iter().enumerate() {
            pts.row_mut(r).assign(&clean.points().row(i));
        }
        DiscreteMeasure::uniform(pts)
    };
    let a = rows(&picks[..subsample_size])?;
    let b = rows(&picks[subsample_size..])?;

    let cost = CostMatrix::from_points(a.points(), b.points(), spec)?;
    let (plan, _) = solve_transport(&a, &b, &cost)?;
    let mut matched: Vec<f64> = plan
        .mass()
        .indexed_iter()
        .filter(|(_, &mass)| mass > PLAN_SUPPORT_TOL)
        .map(|((i, j), _)| cost.values()[[i, j]])
        .collect();
    matched.sort_by(|x, y| x.total_cmp(y));
    // nearest-rank percentile
    let rank = ((percentile / 100.0) * matched.len() as f64).ceil() as usize;
    let value = matched[rank.clamp(1, matched.len()) - 1];
    Ok((value / 2.0).max(LAMBDA_FLOOR))
}

/// One adjacent-pair nesting failure in a λ scan: indices flagged at the
/// larger λ but not at the smaller one.
#[derive(Debug, Clone, Serialize)]
pub struct NestingViolation {
    pub lambda_low: f64,
    pub lambda_high: f64,
    pub escaped_indices: Vec<usize>,
}

/// Per-λ outlier sets plus the nesting report for an ascending grid.
#[derive(Debug, Clone)]
pub struct ScanReport {
    pub lambdas: Vec<f64>,
    pub outlier_sets: Vec<Vec<usize>>,
    pub violations: Vec<NestingViolation>,
    pub adjacent_pairs: usize,
}

impl ScanReport {
    /// True when every larger-λ set was contained in its smaller-λ neighbor.
    pub fn nested(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Runs [`detect_outliers`] over an ascending λ grid and checks that outlier
/// sets shrink as λ grows. Nesting is a measured property, not an assertion:
/// violations are listed, never panicked on.
pub fn scan_lambda(
    contaminated: &DiscreteMeasure,
    clean: &DiscreteMeasure,
    spec: CostSpec,
    grid: &[f64],
    opts: &DetectOptions,
) -> Result<ScanReport> {
    if grid.len() < 2 {
        return Err(Error::InvalidConfig("λ grid needs at least 2 values".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("λ grid must be strictly ascending".into()));
    }
    let mut outlier_sets = Vec::with_capacity(grid.len());
    for &lambda in grid {
        outlier_sets.push(detect_outliers(contaminated, clean, spec, lambda, opts)?.outlier_indices);
    }
    let mut violations = Vec::new();
    for w in 0..grid.len() - 1 {
        let lower: &Vec<usize> = &outlier_sets[w];
        let upper: &Vec<usize> = &outlier_sets[w + 1];
        let escaped: Vec<usize> = upper
            .iter()
            .copied()
            .filter(|i| !lower.contains(i))
            .collect();
        if !escaped.is_empty() {
            violations.push(NestingViolation {
                lambda_low: grid[w],
                lambda_high: grid[w + 1],
                escaped_indices: escaped,
            });
        }
    }
    Ok(ScanReport {
        lambdas: grid.to_vec(),
        outlier_sets,
        violations,
        adjacent_pairs: grid.len() - 1,
    })
}
