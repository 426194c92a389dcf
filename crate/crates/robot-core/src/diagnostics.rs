//! Executable checks of the upper bound and the formulation equivalences —
//! the oracle harness behind the acceptance suite and `bench equivalence`.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cost::{CostMatrix, CostSpec};
use crate::error::{Error, Result};
use crate::exact::{solve_f1, solve_f3, solve_f4};
use crate::measure::{tv_distance, DiscreteMeasure};
use crate::reconstruct::f2_to_f1;
use crate::transport::solve_transport;

/// Coordinates closer than this are merged when building a union support.
const COINCIDENT_TOL: f64 = 1e-12;

/// Embeds several measures on the union of their supports, merging
/// coincident points by summing weights, so TV distances and mixtures are
/// computable as plain vector operations.
pub fn union_support(measures: &[&DiscreteMeasure]) -> Result<(Array2<f64>, Vec<Array1<f64>>)> {
    let d = measures
        .first()
        .ok_or(Error::EmptyPointSet)?
        .dim();
    if measures.iter().any(|m| m.dim() != d) {
        return Err(Error::PointDimMismatch {
            left: d,
            right: measures.iter().map(|m| m.dim()).find(|&x| x != d).unwrap_or(d),
        });
    }
    let mut union: Vec<Vec<f64>> = Vec::new();
    let locate = |row: &[f64], union: &mut Vec<Vec<f64>>| -> usize {
        for (idx, candidate) in union.iter().enumerate() {
            if candidate
                .iter()
                .zip(row.iter())
                .all(|(a, b)| (a - b).abs() <= COINCIDENT_TOL)
            {
                return idx;
            }
        }
        union.push(row.to_vec());
        union.len() - 1
    };

    let mut embeddings: Vec<Vec<(usize, f64)>> = Vec::with_capacity(measures.len());
    for m in measures {
        let mut pairs = Vec::with_capacity(m.len());
        for i in 0..m.len() {
            let row: Vec<f64> = m.points().row(i).iter().copied().collect();
            let idx = locate(&row, &mut union);
            pairs.push((idx, m.weights()[i]));
        }
        embeddings.push(pairs);
    }

    let total = union.len();
    let mut points = Array2::<f64>::zeros((total, d));
    for (i, row) in union.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            points[[i, k]] = v;
        }
    }
    let weights = embeddings
        .into_iter()
        .map(|pairs| {
            let mut w = Array1::<f64>::zeros(total);
            for (idx, mass) in pairs {
                w[idx] += mass;
            }
            w
        })
        .collect();
    Ok((points, weights))
}

/// The three upper bounds on the robust transport value of the contaminated
/// mixture `μ̃ = (1−ε)μ + ε·μ_c` against `ν`, and whether the minimum holds.
///
/// The discrete objective prices marginal modifications by their full L1
/// mass (`‖s₁‖₁ + ‖t₁‖₁`), which is twice the ½-normalized TV distance, so
/// the TV terms of the bound enter as `λ·Σ|·| = 2λ·TV`. With the λ·TV
/// pricing the second bound is violated by easy instances (e.g. disjoint
/// supports, all costs above `2λ`, value in `(λ, 2λ]`).
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub robot_value: f64,
    /// OT(μ, ν) + 2λ·ε·TV(μ, μ_c)
    pub bound_clean_ot: f64,
    /// 2λ·TV(μ̃, ν)
    pub bound_tv: f64,
    /// OT(μ̃, ν)
    pub bound_contaminated_ot: f64,
    pub holds: bool,
}

const BOUND_SLACK: f64 = 1e-8;

/// Evaluates the bound on a concrete instance via the exact solvers.
pub fn robot_upper_bounds(
    mu: &DiscreteMeasure,
    mu_c: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    eps: f64,
    spec: CostSpec,
    lambda: f64,
) -> Result<BoundCheck> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidEpsilon(eps));
    }

    // the mixture lives on the union of supp(μ) and supp(μ_c)
    let (mix_points, mix_weights) = union_support(&[mu, mu_c])?;
    let mixture_raw = mix_weights[0].mapv(|v| v * (1.0 - eps)) + mix_weights[1].mapv(|v| v * eps);
    let mixture = DiscreteMeasure::new(mix_points.clone(), Some(mixture_raw))?;

    let robot_value = solve_f1(&mixture, nu, spec, lambda)?.0.objective();

    let ot = |a: &DiscreteMeasure, b: &DiscreteMeasure| -> Result<f64> {
        let cost = CostMatrix::from_points(a.points(), b.points(), spec)?;
        Ok(solve_transport(a, b, &cost)?.1.objective)
    };

    let tv_mu_muc = tv_distance(mix_weights[0].view(), mix_weights[1].view())?;
    let bound_clean_ot = ot(mu, nu)? + 2.0 * lambda * eps * tv_mu_muc;

    let (_, pair_weights) = union_support(&[&mixture, nu])?;
    let bound_tv =
        2.0 * lambda * tv_distance(pair_weights[0].view(), pair_weights[1].view())?;

    let bound_contaminated_ot = ot(&mixture, nu)?;

    let min_bound = bound_clean_ot.min(bound_tv).min(bound_contaminated_ot);
    Ok(BoundCheck {
        robot_value,
        bound_clean_ot,
        bound_tv,
        bound_contaminated_ot,
        holds: robot_value <= min_bound + BOUND_SLACK,
    })
}

/// One random-instance comparison of the four formulations.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceTrial {
    pub trial: usize,
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    pub cost: CostSpec,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    pub reconstructed: f64,
}

/// Worst-case objective gaps over the random family.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub trials: usize,
    pub seed: u64,
    pub max_gap_f2: f64,
    pub max_gap_f3: f64,
    pub max_gap_f4: f64,
    pub max_gap_reconstruction: f64,
    pub cases: Vec<EquivalenceTrial>,
}

/// Solves every formulation on seeded random instances (sizes
/// `2..=max_size`, both cost kinds, λ cycling through `lambdas`) and records
/// pairwise objective gaps. Deterministic in `seed`.
pub fn equivalence_suite(
    seed: u64,
    trials: usize,
    max_size: usize,
    lambdas: &[f64],
    kinds: &[CostSpec],
) -> Result<EquivalenceReport> {
    if trials == 0 || max_size < 2 || lambdas.is_empty() || kinds.is_empty() {
        return Err(Error::InvalidConfig(
            "equivalence suite needs trials ≥ 1, max_size ≥ 2, nonempty λ and cost sets".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = EquivalenceReport {
        trials,
        seed,
        max_gap_f2: 0.0,
        max_gap_f3: 0.0,
        max_gap_f4: 0.0,
        max_gap_reconstruction: 0.0,
        cases: Vec::with_capacity(trials),
    };

    for trial in 0..trials {
        let n = rng.random_range(2..=max_size);
        let m = rng.random_range(2..=max_size);
        let d = rng.random_range(1..=3);
        let mu = random_measure(&mut rng, n, d);
        let nu = random_measure(&mut rng, m, d);
        let lambda = lambdas[trial % lambdas.len()];
        let kind = kinds[(trial / lambdas.len()) % kinds.len()];

        let cost = CostMatrix::from_points(mu.points(), nu.points(), kind)?;
        let truncated = cost.truncate(lambda)?;
        let (plan2, rep2) = solve_transport(&mu, &nu, &truncated)?;
        let f2 = rep2.objective;
        let f1 = solve_f1(&mu, &nu, kind, lambda)?.0.objective();
        let f3 = solve_f3(&mu, &nu, kind, lambda)?.0.objective;
        let f4 = solve_f4(&mu, &nu, &cost, lambda, false)?.0.objective;
        let reconstructed = f2_to_f1(&plan2, &cost, lambda)?.objective();

        report.max_gap_f2 = report.max_gap_f2.max((f1 - f2).abs());
        report.max_gap_f3 = report.max_gap_f3.max((f1 - f3).abs());
        report.max_gap_f4 = report.max_gap_f4.max((f1 - f4).abs());
        report.max_gap_reconstruction =
            report.max_gap_reconstruction.max((reconstructed - f2).abs());
        report.cases.push(EquivalenceTrial {
            trial,
            n,
            m,
            lambda,
            cost: kind,
            f1,
            f2,
            f3,
            f4,
            reconstructed,
        });
    }
    Ok(report)
}

fn random_measure(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DiscreteMeasure {
    let points = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
    let weights = Array1::from_shape_fn(n, |_| rng.random_range(0.05..1.0));
    DiscreteMeasure::new(points, Some(weights)).expect("valid random measure")
}
