//! Building a marginal-modification solution out of a truncated-cost plan.
//!
//! Given an optimal plan for OT under `min{c, 2λ}`, the corresponding slack
//! solution is mechanical: entries whose untruncated cost exceeds `2λ` are
//! zeroed, their row mass moves into the source slack `s₁` and their column
//! mass onto the diagonal of the bottom-right block (equivalently `t₁`). The
//! map is continuous, so entropic plans go through it too — that is the whole
//! outlier-detection pipeline.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::cost::{validate_lambda, CostMatrix};
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::plan::{RobotSolution, TransportPlan};

/// Default gate on the input plan's marginal residuals.
pub const MARGINAL_GATE: f64 = 1e-6;

/// Source/target slack vectors reconstructed from a truncated-cost plan,
/// without materializing the augmented matrix. `s₁(i)` is minus the plan
/// mass point `i` sends across truncated entries; `t₁(j)` the mass column
/// `j` receives through them.
pub fn slacks_only(
    plan: &TransportPlan,
    cost: &CostMatrix,
    lambda: f64,
) -> Result<(Array1<f64>, Array1<f64>)> {
    validate_lambda(lambda)?;
    if cost.truncation().is_some() {
        return Err(Error::AlreadyTruncated);
    }
    let (n, m) = (plan.nrows(), plan.ncols());
    if cost.nrows() != n || cost.ncols() != m {
        return Err(Error::ShapeMismatch {
            expected: (n, m),
            got: (cost.nrows(), cost.ncols()),
        });
    }
    let cap = 2.0 * lambda;
    let mut s1 = Array1::<f64>::zeros(n);
    let mut t1 = Array1::<f64>::zeros(m);
    for ((i, j), &mass) in plan.mass().indexed_iter() {
        if cost.values()[[i, j]] > cap {
            s1[i] -= mass;
            t1[j] += mass;
        }
    }
    Ok((s1, t1))
}

/// Augments the plan, zeroes the truncated entries, parks their column mass
/// on the bottom-right diagonal, and books both sides as slack. `cost` is
/// the *untruncated* ground cost; the plan's marginal residuals must pass
/// `marginal_tol`.
pub fn f2_to_f1_with_tol(
    plan: &TransportPlan,
    cost: &CostMatrix,
    lambda: f64,
    marginal_tol: f64,
) -> Result<RobotSolution> {
    let residual = plan.row_residual().max(plan.col_residual());
    if residual > marginal_tol {
        return Err(Error::MarginalResidual {
            residual,
            tolerance: marginal_tol,
        });
    }
    let (s1, t1) = slacks_only(plan, cost, lambda)?;
    let (n, m) = (plan.nrows(), plan.ncols());
    let cap = 2.0 * lambda;

    let mut augmented = Array2::<f64>::zeros((n + m, n + m));
    let mut objective = 0.0;
    for ((i, j), &mass) in plan.mass().indexed_iter() {
        let c = cost.values()[[i, j]];
        if c <= cap {
            augmented[[i, n + j]] = mass;
            objective += c * mass;
        }
    }
    for j in 0..m {
        augmented[[n + j, n + j]] = t1[j];
    }
    let slack_l1: f64 =
        s1.iter().map(|v| v.abs()).sum::<f64>() + t1.iter().map(|v| v.abs()).sum::<f64>();
    objective += lambda * slack_l1;

    RobotSolution::new(augmented, s1, t1, objective, lambda)
}

/// [`f2_to_f1_with_tol`] at the default [`MARGINAL_GATE`].
pub fn f2_to_f1(plan: &TransportPlan, cost: &CostMatrix, lambda: f64) -> Result<RobotSolution> {
    f2_to_f1_with_tol(plan, cost, lambda, MARGINAL_GATE)
}

/// Constraint violations of a slack solution against its measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    /// max |row sum − (μ+s₁; t₁)|
    pub row_violation: f64,
    /// max |column sum − (0; ν)|
    pub col_violation: f64,
    /// max(0, −min plan entry)
    pub negativity: f64,
    /// |Σs₁ + Σt₁|
    pub balance_violation: f64,
    /// max(0, −min(μ + s₁))
    pub source_mass_negativity: f64,
}

impl FeasibilityReport {
    pub fn max_violation(&self) -> f64 {
        self.row_violation
            .max(self.col_violation)
            .max(self.negativity)
            .max(self.balance_violation)
            .max(self.source_mass_negativity)
    }
}

/// Measures how far a slack solution is from the marginal-modification
/// constraints for `(μ, ν)`. Always returns a report; nothing is asserted.
pub fn check_f1_feasibility(
    sol: &RobotSolution,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> FeasibilityReport {
    check_f1_feasibility_parts(sol.plan(), sol.s1(), sol.t1(), mu, nu)
}

/// As [`check_f1_feasibility`] but on raw pieces, so corrupted candidates
/// that the typed constructor would refuse can still be diagnosed.
pub fn check_f1_feasibility_parts(
    plan: ArrayView2<'_, f64>,
    s1: ArrayView1<'_, f64>,
    t1: ArrayView1<'_, f64>,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> FeasibilityReport {
    let n = s1.len();
    let m = t1.len();

    let mut row_violation: f64 = 0.0;
    for r in 0..(n + m).min(plan.nrows()) {
        let target = if r < n {
            mu.weights().get(r).copied().unwrap_or(0.0) + s1[r]
        } else {
            t1[r - n]
        };
        row_violation = row_violation.max((plan.row(r).sum() - target).abs());
    }
    let mut col_violation: f64 = 0.0;
    for c in 0..(n + m).min(plan.ncols()) {
        let target = if c < n {
            0.0
        } else {
            nu.weights().get(c - n).copied().unwrap_or(0.0)
        };
        col_violation = col_violation.max((plan.column(c).sum() - target).abs());
    }
    let negativity = plan.iter().fold(0.0f64, |acc, &v| acc.max(-v));
    let balance_violation = (s1.sum() + t1.sum()).abs();
    let source_mass_negativity = (0..n.min(mu.len()))
        .map(|i| -(mu.weights()[i] + s1[i]))
        .fold(0.0f64, f64::max);

    FeasibilityReport {
        row_violation,
        col_violation,
        negativity,
        balance_violation,
        source_mass_negativity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostSpec;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn example() -> (TransportPlan, CostMatrix) {
        let plan = TransportPlan::new(array![[0.5, 0.2], [0.0, 0.3]], 0.0, 0.0).unwrap();
        let cost =
            CostMatrix::from_values(array![[0.0, 3.0], [3.0, 0.0]], CostSpec::SquaredEuclidean)
                .unwrap();
        (plan, cost)
    }

    fn example_measures() -> (DiscreteMeasure, DiscreteMeasure) {
        let pts = array![[0.0], [3f64.sqrt()]];
        (
            DiscreteMeasure::new(pts.clone(), Some(array![0.7, 0.3])).unwrap(),
            DiscreteMeasure::new(pts, Some(array![0.5, 0.5])).unwrap(),
        )
    }

    /// Hand-executed map on the 2×2 example: 𝓘 = {(0,1),(1,0)}, the 0.2
    /// sitting at (0,1) moves to slack, nothing else does.
    #[test]
    fn derived_two_by_two() {
        let (plan, cost) = example();
        let sol = f2_to_f1(&plan, &cost, 0.5).unwrap();
        assert_abs_diff_eq!(sol.s1()[0], -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(sol.s1()[1], 0.0);
        assert_abs_diff_eq!(sol.t1()[0], 0.0);
        assert_abs_diff_eq!(sol.t1()[1], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(sol.objective(), 0.2, epsilon = 1e-15);
        // top-right block zeroed on 𝓘, bottom-right diagonal carries t₁
        assert_abs_diff_eq!(sol.plan()[[0, 2]], 0.5);
        assert_abs_diff_eq!(sol.plan()[[0, 3]], 0.0);
        assert_abs_diff_eq!(sol.plan()[[1, 2]], 0.0);
        assert_abs_diff_eq!(sol.plan()[[1, 3]], 0.3);
        assert_abs_diff_eq!(sol.plan()[[2, 2]], 0.0);
        assert_abs_diff_eq!(sol.plan()[[3, 3]], 0.2);
        // structural shape: blocks (1,1), (2,1) zero and (2,2) diagonal
        for r in 0..4 {
            for c in 0..2 {
                assert_eq!(sol.plan()[[r, c]], 0.0);
            }
        }
        assert_eq!(sol.plan()[[2, 3]], 0.0);
        assert_eq!(sol.plan()[[3, 2]], 0.0);
    }

    #[test]
    fn inactive_truncation_keeps_plan() {
        let (plan, cost) = example();
        let sol = f2_to_f1(&plan, &cost, 100.0).unwrap();
        assert!(sol.slack_l1() < 1e-15);
        let direct = plan.transport_cost(cost.values());
        assert_abs_diff_eq!(sol.objective(), direct, epsilon = 1e-15);

        // plan with no mass on any truncated entry behaves identically
        let plan2 = TransportPlan::new(array![[0.7, 0.0], [0.0, 0.3]], 0.0, 0.0).unwrap();
        let sol2 = f2_to_f1(&plan2, &cost, 0.5).unwrap();
        assert!(sol2.slack_l1() < 1e-15);
        assert_abs_diff_eq!(sol2.objective(), 0.0, epsilon = 1e-15);
    }

    /// Objective preservation: the reconstruction pays exactly the truncated
    /// cost of the plan it came from, and the slack mass equals the plan
    /// mass on 𝓘 on both sides.
    #[test]
    fn objective_equals_truncated_cost() {
        let (plan, cost) = example();
        for lambda in [0.2, 0.5, 1.0, 1.4999, 1.5, 2.0] {
            let sol = f2_to_f1(&plan, &cost, lambda).unwrap();
            let truncated = cost.truncate(lambda).unwrap();
            let direct = plan.transport_cost(truncated.values());
            assert_abs_diff_eq!(sol.objective(), direct, epsilon = 1e-14);
            let on_index: f64 = cost
                .outlier_index_set(lambda)
                .unwrap()
                .iter()
                .map(|&(i, j)| plan.mass()[[i, j]])
                .sum();
            assert_abs_diff_eq!(
                sol.s1().iter().map(|v| v.abs()).sum::<f64>(),
                on_index,
                epsilon = 1e-15
            );
            assert_abs_diff_eq!(sol.t1().sum(), on_index, epsilon = 1e-15);
            // 𝓘-entries of the reconstructed plan are zero by construction
            for &(i, j) in &cost.outlier_index_set(lambda).unwrap() {
                assert_eq!(sol.plan()[[i, 2 + j]], 0.0);
            }
        }
    }

    #[test]
    fn marginal_gate_rejects_sloppy_plans() {
        let (plan, cost) = example();
        let sloppy = TransportPlan::new(plan.mass().to_owned(), 1e-3, 0.0).unwrap();
        assert!(matches!(
            f2_to_f1(&sloppy, &cost, 0.5),
            Err(Error::MarginalResidual { .. })
        ));
        assert!(f2_to_f1_with_tol(&sloppy, &cost, 0.5, 1e-2).is_ok());
    }

    #[test]
    fn truncated_cost_rejected() {
        let (plan, cost) = example();
        let truncated = cost.truncate(0.5).unwrap();
        assert!(matches!(
            f2_to_f1(&plan, &truncated, 0.5),
            Err(Error::AlreadyTruncated)
        ));
    }

    #[test]
    fn feasibility_report_flags_violations() {
        let (plan, cost) = example();
        let (mu, nu) = example_measures();
        let sol = f2_to_f1(&plan, &cost, 0.5).unwrap();
        let clean = check_f1_feasibility(&sol, &mu, &nu);
        assert!(clean.max_violation() <= 1e-10, "{clean:?}");

        // one entry pushed to −0.01: negativity picks up exactly that
        let mut corrupted = sol.plan().to_owned();
        corrupted[[0, 2]] = -0.01;
        let report =
            check_f1_feasibility_parts(corrupted.view(), sol.s1(), sol.t1(), &mu, &nu);
        assert_abs_diff_eq!(report.negativity, 0.01, epsilon = 1e-15);

        // s₁ summing to −0.1 against t₁ summing to 0.05
        let report = check_f1_feasibility_parts(
            sol.plan(),
            array![-0.1, 0.0].view(),
            array![0.0, 0.05].view(),
            &mu,
            &nu,
        );
        assert_abs_diff_eq!(report.balance_violation, 0.05, epsilon = 1e-15);
    }
}
