//! LP oracles for the marginal-modification formulations.
//!
//! All three problems relax the marginals of a coupling and pay `λ` per unit
//! of L1 adjustment. They share one optimal value, which also equals plain OT
//! under the cost truncated at `2λ`; the test suites lean on those
//! equalities. The encodings below are dense equality-form LPs handed to
//! [`crate::simplex`].

use std::time::Instant;

use ndarray::{Array1, Array2};

use crate::cost::{validate_lambda, CostMatrix, CostSpec};
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::plan::{RobotSolution, SolveReport};
use crate::simplex::{simplex_solve_detailed, LpProblem, SimplexOptions};

/// Two-sided solution: slacks on both marginals of the augmented plan.
#[derive(Debug, Clone)]
pub struct TwoSidedSolution {
    pub plan: Array2<f64>,
    pub s1: Array1<f64>,
    pub t1: Array1<f64>,
    pub s2: Array1<f64>,
    pub t2: Array1<f64>,
    pub objective: f64,
}

/// Auxiliary solution: an `n×m` plan whose marginals float at price λ.
#[derive(Debug, Clone)]
pub struct AuxSolution {
    pub plan: Array2<f64>,
    pub s1: Array1<f64>,
    pub s2: Array1<f64>,
    pub objective: f64,
}

fn finite_lambda(lambda: f64) -> Result<()> {
    validate_lambda(lambda)?;
    if !lambda.is_finite() {
        return Err(Error::InvalidLambda(lambda));
    }
    Ok(())
}

/// Minimizes `⟨C_aug, Π⟩ + λ(‖s₁‖₁ + ‖t₁‖₁)` over augmented plans whose
/// column sums are `[0; ν]` and row sums `[μ + s₁; t₁]`.
///
/// The first `n` columns of `Π` are structurally zero and eliminated before
/// solving. `s₁` is modeled as `−s⁻` with `s⁻ ≥ 0`: an optimal solution with
/// nonpositive source slack always exists (the reconstruction from a
/// truncated-cost optimum produces one), and the restriction keeps LP
/// tie-breaking from returning sign-mixed slacks.
pub fn solve_f1(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    spec: CostSpec,
    lambda: f64,
) -> Result<(RobotSolution, SolveReport)> {
    finite_lambda(lambda)?;
    if mu.dim() != nu.dim() {
        return Err(Error::PointDimMismatch {
            left: mu.dim(),
            right: nu.dim(),
        });
    }
    let start = Instant::now();
    let n = mu.len();
    let m = nu.len();
    let aug = CostMatrix::augmented(mu.points(), nu.points(), spec)?;
    let caug = aug.values();

    // variables: P[r][c] for r < n+m, c < m (kept columns), then s⁻ (n)
    let pvars = (n + m) * m;
    let total = pvars + n;
    let pid = |r: usize, c: usize| r * m + c;

    let mut objective = Array1::<f64>::zeros(total);
    for r in 0..n + m {
        for c in 0..m {
            // bottom rows feed ‖t₁‖₁ at λ per unit on top of the cost
            let extra = if r >= n { lambda } else { 0.0 };
            objective[pid(r, c)] = caug[[r, n + c]] + extra;
        }
    }
    for i in 0..n {
        objective[pvars + i] = lambda;
    }

    let rows = n + m;
    let mut eq = Array2::<f64>::zeros((rows, total));
    let mut rhs = Array1::<f64>::zeros(rows);
    for i in 0..n {
        for c in 0..m {
            eq[[i, pid(i, c)]] = 1.0;
        }
        eq[[i, pvars + i]] = 1.0; // Σ_c P[i][c] + s⁻_i = μ_i
        rhs[i] = mu.weights()[i];
    }
    for c in 0..m {
        for r in 0..n + m {
            eq[[n + c, pid(r, c)]] = 1.0;
        }
        rhs[n + c] = nu.weights()[c];
    }

    let problem = LpProblem::nonnegative(objective, eq, rhs);
    let (x, value, pivots) = simplex_solve_detailed(&problem, &SimplexOptions::default())?;

    let mut plan = Array2::<f64>::zeros((n + m, n + m));
    for r in 0..n + m {
        for c in 0..m {
            plan[[r, n + c]] = x[pid(r, c)];
        }
    }
    let s1 = Array1::from_iter((0..n).map(|i| -x[pvars + i]));
    let t1 = Array1::from_iter((0..m).map(|j| (0..m).map(|c| x[pid(n + j, c)]).sum::<f64>()));

    let mut row_res: f64 = 0.0;
    for i in 0..n {
        let sum: f64 = (0..m).map(|c| x[pid(i, c)]).sum();
        row_res = row_res.max((sum - (mu.weights()[i] + s1[i])).abs());
    }
    let mut col_res: f64 = 0.0;
    for c in 0..m {
        let sum: f64 = (0..n + m).map(|r| x[pid(r, c)]).sum();
        col_res = col_res.max((sum - nu.weights()[c]).abs());
    }

    let report = SolveReport::exact(value, pivots, row_res, col_res, start.elapsed().as_secs_f64());
    let solution = RobotSolution::new(plan, s1, t1, value, lambda)?;
    Ok((solution, report))
}

/// Minimizes `⟨C_aug, Π⟩ + λ(‖s₁‖₁+‖t₁‖₁+‖s₂‖₁+‖t₂‖₁)` with both marginals
/// slack: row sums `[μ+s₁; t₁]`, column sums `[s₂; ν+t₂]`, and each slack
/// pair `(s₁, t₁)`, `(s₂, t₂)` summing to zero.
///
/// `t₁` and `s₂` are row/column sums of the plan, hence nonnegative and not
/// explicit variables; `s₁` and `t₂` are sign-free and split.
pub fn solve_f3(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    spec: CostSpec,
    lambda: f64,
) -> Result<(TwoSidedSolution, SolveReport)> {
    finite_lambda(lambda)?;
    if mu.dim() != nu.dim() {
        return Err(Error::PointDimMismatch {
            left: mu.dim(),
            right: nu.dim(),
        });
    }
    let start = Instant::now();
    let n = mu.len();
    let m = nu.len();
    let k = n + m;
    let aug = CostMatrix::augmented(mu.points(), nu.points(), spec)?;
    let caug = aug.values();

    // variables: Π[r][c] over the full k×k grid, s₁⁺, s₁⁻ (n each),
    // t₂⁺, t₂⁻ (m each)
    let pvars = k * k;
    let s1p = pvars;
    let s1m = pvars + n;
    let t2p = pvars + 2 * n;
    let t2m = pvars + 2 * n + m;
    let total = pvars + 2 * n + 2 * m;
    let pid = |r: usize, c: usize| r * k + c;

    let mut objective = Array1::<f64>::zeros(total);
    for r in 0..k {
        for c in 0..k {
            // bottom rows feed ‖t₁‖₁, first-n columns feed ‖s₂‖₁
            let extra =
                lambda * ((if r >= n { 1.0 } else { 0.0 }) + (if c < n { 1.0 } else { 0.0 }));
            objective[pid(r, c)] = caug[[r, c]] + extra;
        }
    }
    for v in 0..2 * n {
        objective[s1p + v] = lambda;
    }
    for v in 0..2 * m {
        objective[t2p + v] = lambda;
    }

    // rows: n source marginals, m target marginals, 2 balances
    let rows = n + m + 2;
    let mut eq = Array2::<f64>::zeros((rows, total));
    let mut rhs = Array1::<f64>::zeros(rows);
    for i in 0..n {
        for c in 0..k {
            eq[[i, pid(i, c)]] = 1.0;
        }
        eq[[i, s1p + i]] = -1.0; // Σ_c Π[i][c] − s₁⁺ + s₁⁻ = μ_i
        eq[[i, s1m + i]] = 1.0;
        rhs[i] = mu.weights()[i];
    }
    for j in 0..m {
        for r in 0..k {
            eq[[n + j, pid(r, n + j)]] = 1.0;
        }
        eq[[n + j, t2p + j]] = -1.0; // Σ_r Π[r][n+j] − t₂⁺ + t₂⁻ = ν_j
        eq[[n + j, t2m + j]] = 1.0;
        rhs[n + j] = nu.weights()[j];
    }
    // Σs₁ + Σt₁ = 0 with t₁ the bottom-row mass
    for i in 0..n {
        eq[[n + m, s1p + i]] = 1.0;
        eq[[n + m, s1m + i]] = -1.0;
    }
    for r in n..k {
        for c in 0..k {
            eq[[n + m, pid(r, c)]] = 1.0;
        }
    }
    // Σs₂ + Σt₂ = 0 with s₂ the first-n-column mass
    for j in 0..m {
        eq[[n + m + 1, t2p + j]] = 1.0;
        eq[[n + m + 1, t2m + j]] = -1.0;
    }
    for r in 0..k {
        for c in 0..n {
            eq[[n + m + 1, pid(r, c)]] = 1.0;
        }
    }

    let problem = LpProblem::nonnegative(objective, eq, rhs);
    let (x, value, pivots) = simplex_solve_detailed(&problem, &SimplexOptions::default())?;

    let mut plan = Array2::<f64>::zeros((k, k));
    for r in 0..k {
        for c in 0..k {
            plan[[r, c]] = x[pid(r, c)];
        }
    }
    let s1 = Array1::from_iter((0..n).map(|i| x[s1p + i] - x[s1m + i]));
    let t1 = Array1::from_iter((0..m).map(|j| plan.row(n + j).sum()));
    let s2 = Array1::from_iter((0..n).map(|i| plan.column(i).sum()));
    let t2 = Array1::from_iter((0..m).map(|j| x[t2p + j] - x[t2m + j]));

    let mut row_res: f64 = 0.0;
    for i in 0..n {
        row_res = row_res.max((plan.row(i).sum() - (mu.weights()[i] + s1[i])).abs());
    }
    let mut col_res: f64 = 0.0;
    for j in 0..m {
        col_res = col_res.max((plan.column(n + j).sum() - (nu.weights()[j] + t2[j])).abs());
    }

    let report = SolveReport::exact(value, pivots, row_res, col_res, start.elapsed().as_secs_f64());
    let solution = TwoSidedSolution {
        plan,
        s1,
        t1,
        s2,
        t2,
        objective: value,
    };
    Ok((solution, report))
}

/// Minimizes `⟨C, Π⟩ + λ(‖s₁‖₁ + ‖s₂‖₁)` subject to `Π1 = p + s₁`,
/// `Πᵀ1 = q + s₂`, `Π ≥ 0`, with both slacks sign-free.
///
/// With `nonpositive_slacks` the positive parts are dropped, constraining
/// `s₁, s₂ ≤ 0`; an optimum of that form always exists, and comparing the
/// two objectives checks the sign lemma without depending on tie-breaking.
pub fn solve_f4(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
    lambda: f64,
    nonpositive_slacks: bool,
) -> Result<(AuxSolution, SolveReport)> {
    finite_lambda(lambda)?;
    if cost.truncation().is_some() {
        return Err(Error::AlreadyTruncated);
    }
    let n = mu.len();
    let m = nu.len();
    if cost.nrows() != n || cost.ncols() != m {
        return Err(Error::ShapeMismatch {
            expected: (n, m),
            got: (cost.nrows(), cost.ncols()),
        });
    }
    let start = Instant::now();
    let c = cost.values();

    // variables: Π[i][j], then (s₁⁺,) s₁⁻, (s₂⁺,) s₂⁻
    let pvars = n * m;
    let plus = usize::from(!nonpositive_slacks);
    let s1p = pvars;
    let s1m = pvars + plus * n;
    let s2p = s1m + n;
    let s2m = s2p + plus * m;
    let total = s2m + m;
    let pid = |i: usize, j: usize| i * m + j;

    let mut objective = Array1::<f64>::zeros(total);
    for i in 0..n {
        for j in 0..m {
            objective[pid(i, j)] = c[[i, j]];
        }
    }
    for v in pvars..total {
        objective[v] = lambda;
    }

    let mut eq = Array2::<f64>::zeros((n + m, total));
    let mut rhs = Array1::<f64>::zeros(n + m);
    for i in 0..n {
        for j in 0..m {
            eq[[i, pid(i, j)]] = 1.0;
        }
        if plus == 1 {
            eq[[i, s1p + i]] = -1.0;
        }
        eq[[i, s1m + i]] = 1.0; // Σ_j Π[i][j] − s₁⁺ + s₁⁻ = p_i
        rhs[i] = mu.weights()[i];
    }
    for j in 0..m {
        for i in 0..n {
            eq[[n + j, pid(i, j)]] = 1.0;
        }
        if plus == 1 {
            eq[[n + j, s2p + j]] = -1.0;
        }
        eq[[n + j, s2m + j]] = 1.0;
        rhs[n + j] = nu.weights()[j];
    }

    let problem = LpProblem::nonnegative(objective, eq, rhs);
    let (x, value, pivots) = simplex_solve_detailed(&problem, &SimplexOptions::default())?;

    let mut plan = Array2::<f64>::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            plan[[i, j]] = x[pid(i, j)];
        }
    }
    let s1 = Array1::from_iter(
        (0..n).map(|i| if plus == 1 { x[s1p + i] } else { 0.0 } - x[s1m + i]),
    );
    let s2 = Array1::from_iter(
        (0..m).map(|j| if plus == 1 { x[s2p + j] } else { 0.0 } - x[s2m + j]),
    );

    let mut row_res: f64 = 0.0;
    for i in 0..n {
        row_res = row_res.max((plan.row(i).sum() - (mu.weights()[i] + s1[i])).abs());
    }
    let mut col_res: f64 = 0.0;
    for j in 0..m {
        col_res = col_res.max((plan.column(j).sum() - (nu.weights()[j] + s2[j])).abs());
    }

    let report = SolveReport::exact(value, pivots, row_res, col_res, start.elapsed().as_secs_f64());
    Ok((
        AuxSolution {
            plan,
            s1,
            s2,
            objective: value,
        },
        report,
    ))
}
