//! Transport plans, slack solutions, and solve reports.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::Serialize;

use crate::error::{Error, Result};

/// Total plan mass must match 1 to this tolerance.
pub const PLAN_MASS_TOL: f64 = 1e-9;
/// Slack balance Σs₁ + Σt₁ must vanish to this tolerance.
pub const SLACK_BALANCE_TOL: f64 = 1e-10;

/// A nonnegative coupling matrix together with the L1 deviations of its
/// marginals from the targets it was solved against.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    mass: Array2<f64>,
    row_residual: f64,
    col_residual: f64,
}

impl TransportPlan {
    pub fn new(mass: Array2<f64>, row_residual: f64, col_residual: f64) -> Result<Self> {
        if mass.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NonFinite("transport plan mass"));
        }
        let total = mass.sum();
        if (total - 1.0).abs() > PLAN_MASS_TOL {
            return Err(Error::MarginalResidual {
                residual: (total - 1.0).abs(),
                tolerance: PLAN_MASS_TOL,
            });
        }
        if !(row_residual >= 0.0) || !(col_residual >= 0.0) {
            return Err(Error::NonFinite("marginal residual"));
        }
        Ok(Self {
            mass,
            row_residual,
            col_residual,
        })
    }

    pub fn mass(&self) -> ArrayView2<'_, f64> {
        self.mass.view()
    }

    pub fn row_residual(&self) -> f64 {
        self.row_residual
    }

    pub fn col_residual(&self) -> f64 {
        self.col_residual
    }

    pub fn nrows(&self) -> usize {
        self.mass.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.mass.ncols()
    }

    /// ⟨C, Π⟩ for a cost matrix of matching shape.
    pub fn transport_cost(&self, cost: ArrayView2<'_, f64>) -> f64 {
        self.mass
            .iter()
            .zip(cost.iter())
            .map(|(&p, &c)| p * c)
            .sum()
    }
}

/// A solution of the marginal-modification problem: the augmented
/// `(n+m)×(n+m)` plan, the slack pair `(s₁ ≤ 0, t₁ ≥ 0)`, the objective, and
/// the λ it was solved at.
///
/// The first `n` columns of the plan are identically zero and the slacks
/// balance: `Σs₁ + Σt₁ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotSolution {
    plan: Array2<f64>,
    s1: Array1<f64>,
    t1: Array1<f64>,
    objective: f64,
    lambda: f64,
}

impl RobotSolution {
    /// Sign/shape tolerance used when admitting solver output.
    const SIGN_TOL: f64 = 1e-9;

    pub fn new(
        plan: Array2<f64>,
        s1: Array1<f64>,
        t1: Array1<f64>,
        objective: f64,
        lambda: f64,
    ) -> Result<Self> {
        let n = s1.len();
        let m = t1.len();
        if plan.dim() != (n + m, n + m) {
            return Err(Error::ShapeMismatch {
                expected: (n + m, n + m),
                got: plan.dim(),
            });
        }
        if plan.iter().any(|v| !v.is_finite() || *v < -Self::SIGN_TOL) {
            return Err(Error::NonFinite("augmented plan"));
        }
        for j in 0..n {
            if plan.column(j).iter().any(|v| v.abs() > Self::SIGN_TOL) {
                return Err(Error::InvalidConfig(format!(
                    "column {j} of the augmented plan must be zero"
                )));
            }
        }
        if s1.iter().any(|&v| v > Self::SIGN_TOL) {
            return Err(Error::InvalidConfig("s1 must be nonpositive".into()));
        }
        if t1.iter().any(|&v| v < -Self::SIGN_TOL) {
            return Err(Error::InvalidConfig("t1 must be nonnegative".into()));
        }
        let balance = s1.sum() + t1.sum();
        if balance.abs() > SLACK_BALANCE_TOL {
            return Err(Error::MarginalResidual {
                residual: balance.abs(),
                tolerance: SLACK_BALANCE_TOL,
            });
        }
        Ok(Self {
            plan,
            s1,
            t1,
            objective,
            lambda,
        })
    }

    pub fn plan(&self) -> ArrayView2<'_, f64> {
        self.plan.view()
    }

    /// Source-side slack, one nonpositive entry per source point.
    pub fn s1(&self) -> ArrayView1<'_, f64> {
        self.s1.view()
    }

    /// Target-side slack, one nonnegative entry per target point.
    pub fn t1(&self) -> ArrayView1<'_, f64> {
        self.t1.view()
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn source_len(&self) -> usize {
        self.s1.len()
    }

    pub fn target_len(&self) -> usize {
        self.t1.len()
    }

    /// ‖s₁‖₁ + ‖t₁‖₁, the total slack mass paid for at rate λ.
    pub fn slack_l1(&self) -> f64 {
        self.s1.iter().map(|v| v.abs()).sum::<f64>()
            + self.t1.iter().map(|v| v.abs()).sum::<f64>()
    }
}

/// What a solver did: final objective, work performed, and feasibility of the
/// result. `entropic_objective` is only set by the entropic solver and holds
/// the regularized objective for debugging.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub objective: f64,
    pub iterations: usize,
    pub row_residual: f64,
    pub col_residual: f64,
    pub converged: bool,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropic_objective: Option<f64>,
}

impl SolveReport {
    pub fn exact(objective: f64, iterations: usize, row: f64, col: f64, seconds: f64) -> Self {
        Self {
            objective,
            iterations,
            row_residual: row,
            col_residual: col,
            converged: true,
            seconds,
            entropic_objective: None,
        }
    }
}
