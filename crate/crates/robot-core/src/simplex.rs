//! Dense two-phase primal simplex for small equality-form LPs.
//!
//! Solves `min cᵀx  s.t.  Ax = b`, where each variable is either nonnegative
//! or free. Free variables are split into differences of nonnegative pairs,
//! rows are sign-normalized, phase 1 minimizes the sum of artificial
//! variables, and phase 2 optimizes the real objective. Pivoting uses
//! Dantzig's rule until the objective stalls on degenerate pivots, then
//! switches to Bland's rule, which guarantees termination.
//!
//! This is oracle code for desk-scale instances (≲ 100×100); clarity and
//! determinism over speed.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Equality-form LP: `min objective·x` subject to `eq_matrix · x = eq_rhs`
/// and `x_j ≥ 0` where `lower_bounds[j] == 0`, `x_j` free where
/// `lower_bounds[j] == -∞`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Array1<f64>,
    pub eq_matrix: Array2<f64>,
    pub eq_rhs: Array1<f64>,
    pub lower_bounds: Array1<f64>,
}

impl LpProblem {
    /// All-nonnegative problem.
    pub fn nonnegative(objective: Array1<f64>, eq_matrix: Array2<f64>, eq_rhs: Array1<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            eq_matrix,
            eq_rhs,
            lower_bounds: Array1::zeros(n),
        }
    }

    fn validate(&self) -> Result<()> {
        let (m, n) = self.eq_matrix.dim();
        if self.objective.len() != n || self.lower_bounds.len() != n {
            return Err(Error::LengthMismatch {
                left: self.objective.len(),
                right: n,
            });
        }
        if self.eq_rhs.len() != m {
            return Err(Error::LengthMismatch {
                left: self.eq_rhs.len(),
                right: m,
            });
        }
        let finite = self.objective.iter().all(|v| v.is_finite())
            && self.eq_matrix.iter().all(|v| v.is_finite())
            && self.eq_rhs.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("LP data"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Constraint-violation tolerance (also phase-1 acceptance).
    pub feas_tol: f64,
    /// Reduced-cost tolerance for optimality.
    pub opt_tol: f64,
    /// Hard pivot budget; `None` means `10·(m+n)²`.
    pub pivot_limit: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-10,
            opt_tol: 1e-9,
            pivot_limit: None,
        }
    }
}

/// Solves the LP, returning the optimal point (in the caller's variable
/// order) and the objective value.
pub fn simplex_solve(problem: &LpProblem) -> Result<(Array1<f64>, f64)> {
    simplex_solve_with(problem, &SimplexOptions::default())
}

pub fn simplex_solve_with(
    problem: &LpProblem,
    opts: &SimplexOptions,
) -> Result<(Array1<f64>, f64)> {
    let (x, objective, _) = simplex_solve_detailed(problem, opts)?;
    Ok((x, objective))
}

/// As [`simplex_solve_with`], additionally reporting the pivot count.
pub fn simplex_solve_detailed(
    problem: &LpProblem,
    opts: &SimplexOptions,
) -> Result<(Array1<f64>, f64, usize)> {
    problem.validate()?;
    let (m, n_orig) = problem.eq_matrix.dim();

    // Split free variables: x_j = u_j - v_j with u, v ≥ 0.
    let mut col_of = Vec::with_capacity(n_orig); // original j -> (pos col, neg col)
    let mut n = 0usize;
    for j in 0..n_orig {
        if problem.lower_bounds[j] == f64::NEG_INFINITY {
            col_of.push((n, Some(n + 1)));
            n += 2;
        } else {
            col_of.push((n, None));
            n += 1;
        }
    }

    let mut a = Array2::<f64>::zeros((m, n));
    let mut c = Array1::<f64>::zeros(n);
    for j in 0..n_orig {
        let (p, neg) = col_of[j];
        for i in 0..m {
            a[[i, p]] = problem.eq_matrix[[i, j]];
        }
        c[p] = problem.objective[j];
        if let Some(q) = neg {
            for i in 0..m {
                a[[i, q]] = -problem.eq_matrix[[i, j]];
            }
            c[q] = -problem.objective[j];
        }
    }
    let mut b = problem.eq_rhs.to_owned();
    for i in 0..m {
        if b[i] < 0.0 {
            b[i] = -b[i];
            for j in 0..n {
                a[[i, j]] = -a[[i, j]];
            }
        }
    }

    let pivot_limit = opts
        .pivot_limit
        .unwrap_or_else(|| 10 * (m + n) * (m + n));
    let mut t = Tableau::new(a, b, n, opts, pivot_limit);

    t.run_phase1()?;
    t.drop_redundant_rows();
    t.run_phase2(&c)?;

    let dense = t.solution(n);
    let mut x = Array1::<f64>::zeros(n_orig);
    for j in 0..n_orig {
        let (p, neg) = col_of[j];
        x[j] = dense[p] - neg.map_or(0.0, |q| dense[q]);
    }
    let objective = problem.objective.dot(&x);
    Ok((x, objective, t.pivots_used))
}

/// Dense tableau: `rows` holds B⁻¹A restricted to the structural columns plus
/// the artificial block, `rhs` holds B⁻¹b, `reduced` the current reduced-cost
/// row, and `basis[i]` the variable basic in row i.
struct Tableau {
    rows: Array2<f64>,
    rhs: Array1<f64>,
    reduced: Array1<f64>,
    basis: Vec<usize>,
    n_struct: usize,
    n_total: usize,
    feas_tol: f64,
    opt_tol: f64,
    pivot_limit: usize,
    pivots_used: usize,
    bland: bool,
    stalled: usize,
    objective_value: f64,
    phase1: bool,
}

/// Entries smaller than this cannot serve as pivots.
const PIVOT_TOL: f64 = 1e-9;
/// Consecutive non-improving pivots before switching to Bland's rule.
const STALL_LIMIT: usize = 64;

impl Tableau {
    fn new(a: Array2<f64>, b: Array1<f64>, n: usize, opts: &SimplexOptions, limit: usize) -> Self {
        let m = a.nrows();
        let n_total = n + m;
        let mut rows = Array2::<f64>::zeros((m, n_total));
        for i in 0..m {
            for j in 0..n {
                rows[[i, j]] = a[[i, j]];
            }
            rows[[i, n + i]] = 1.0;
        }
        // Phase-1 reduced costs with the artificial basis: c_j − Σ_i a_ij.
        let mut reduced = Array1::<f64>::zeros(n_total);
        for j in 0..n {
            reduced[j] = -a.column(j).sum();
        }
        let objective_value = b.sum();
        Self {
            rows,
            rhs: b,
            reduced,
            basis: (n..n_total).collect(),
            n_struct: n,
            n_total,
            feas_tol: opts.feas_tol,
            opt_tol: opts.opt_tol,
            pivot_limit: limit,
            pivots_used: 0,
            bland: false,
            stalled: 0,
            objective_value,
            phase1: true,
        }
    }

    fn m(&self) -> usize {
        self.rhs.len()
    }

    fn active_cols(&self) -> usize {
        if self.phase1 {
            self.n_total
        } else {
            self.n_struct
        }
    }

    fn choose_entering(&self) -> Option<usize> {
        let cols = self.active_cols();
        if self.bland {
            (0..cols).find(|&j| self.reduced[j] < -self.opt_tol)
        } else {
            let mut best = None;
            let mut best_val = -self.opt_tol;
            for j in 0..cols {
                if self.reduced[j] < best_val {
                    best_val = self.reduced[j];
                    best = Some(j);
                }
            }
            best
        }
    }

    fn choose_leaving(&self, entering: usize) -> Option<usize> {
        let mut best_row = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..self.m() {
            let coef = self.rows[[i, entering]];
            if coef > PIVOT_TOL {
                let ratio = self.rhs[i].max(0.0) / coef;
                let better = ratio < best_ratio - 1e-12
                    || (ratio < best_ratio + 1e-12
                        && best_row
                            .map_or(true, |r: usize| self.basis[i] < self.basis[r]));
                if better {
                    best_ratio = ratio;
                    best_row = Some(i);
                }
            }
        }
        best_row
    }

    fn pivot(&mut self, row: usize, col: usize) -> Result<()> {
        self.pivots_used += 1;
        if self.pivots_used > self.pivot_limit {
            return Err(Error::PivotLimit(self.pivot_limit));
        }
        let inv = 1.0 / self.rows[[row, col]];
        for j in 0..self.n_total {
            self.rows[[row, j]] *= inv;
        }
        self.rhs[row] *= inv;
        self.rows[[row, col]] = 1.0; // exact

        for i in 0..self.m() {
            if i == row {
                continue;
            }
            let factor = self.rows[[i, col]];
            if factor != 0.0 {
                for j in 0..self.n_total {
                    self.rows[[i, j]] -= factor * self.rows[[row, j]];
                }
                self.rows[[i, col]] = 0.0;
                self.rhs[i] -= factor * self.rhs[row];
                if self.rhs[i] < 0.0 && self.rhs[i] > -1e-12 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let factor = self.reduced[col];
        if factor != 0.0 {
            for j in 0..self.n_total {
                self.reduced[j] -= factor * self.rows[[row, j]];
            }
            self.reduced[col] = 0.0;
        }
        let delta = factor * self.rhs[row];
        self.objective_value += delta;
        if delta.abs() <= 1e-13 * (1.0 + self.objective_value.abs()) {
            self.stalled += 1;
            if self.stalled >= STALL_LIMIT {
                self.bland = true;
            }
        } else {
            self.stalled = 0;
        }
        self.basis[row] = col;
        Ok(())
    }

    fn iterate(&mut self) -> Result<()> {
        while let Some(entering) = self.choose_entering() {
            match self.choose_leaving(entering) {
                Some(row) => self.pivot(row, entering)?,
                None => return Err(Error::Unbounded),
            }
        }
        Ok(())
    }

    fn run_phase1(&mut self) -> Result<()> {
        self.iterate()?;
        let infeasibility: f64 = self
            .basis
            .iter()
            .zip(self.rhs.iter())
            .filter(|(&var, _)| var >= self.n_struct)
            .map(|(_, &v)| v)
            .sum();
        if infeasibility > self.feas_tol {
            return Err(Error::Infeasible);
        }
        Ok(())
    }

    /// Pivots zero-level artificials out of the basis; rows that cannot be
    /// pivoted are linearly dependent and get removed.
    fn drop_redundant_rows(&mut self) {
        let mut keep = Vec::new();
        for i in 0..self.m() {
            if self.basis[i] < self.n_struct {
                keep.push(i);
                continue;
            }
            let col = (0..self.n_struct)
                .find(|&j| self.rows[[i, j]].abs() > PIVOT_TOL);
            if let Some(j) = col {
                // Manual pivot without the budget: this is cleanup, not search.
                let inv = 1.0 / self.rows[[i, j]];
                for k in 0..self.n_total {
                    self.rows[[i, k]] *= inv;
                }
                self.rhs[i] *= inv;
                for r in 0..self.m() {
                    if r != i {
                        let f = self.rows[[r, j]];
                        if f != 0.0 {
                            for k in 0..self.n_total {
                                self.rows[[r, k]] -= f * self.rows[[i, k]];
                            }
                            self.rhs[r] -= f * self.rhs[i];
                        }
                    }
                }
                self.basis[i] = j;
                keep.push(i);
            }
            // else: redundant row, dropped below
        }
        if keep.len() != self.m() {
            let rows = ndarray::Array2::from_shape_fn((keep.len(), self.n_total), |(i, j)| {
                self.rows[[keep[i], j]]
            });
            let rhs = Array1::from_iter(keep.iter().map(|&i| self.rhs[i]));
            self.basis = keep.iter().map(|&i| self.basis[i]).collect();
            self.rows = rows;
            self.rhs = rhs;
        }
    }

    fn run_phase2(&mut self, c: &Array1<f64>) -> Result<()> {
        self.phase1 = false;
        self.bland = false;
        self.stalled = 0;
        // reduced costs for the new objective: c_j − c_B·(B⁻¹A)_j
        let mut reduced = Array1::<f64>::zeros(self.n_total);
        for j in 0..self.n_struct {
            let mut v = c[j];
            for i in 0..self.m() {
                let basic = self.basis[i];
                if basic < self.n_struct {
                    v -= c[basic] * self.rows[[i, j]];
                }
            }
            reduced[j] = v;
        }
        self.reduced = reduced;
        self.objective_value = (0..self.m())
            .map(|i| {
                let basic = self.basis[i];
                if basic < self.n_struct {
                    c[basic] * self.rhs[i]
                } else {
                    0.0
                }
            })
            .sum();
        self.iterate()
    }

    fn solution(&self, n: usize) -> Array1<f64> {
        let mut x = Array1::<f64>::zeros(n);
        for (i, &var) in self.basis.iter().enumerate() {
            if var < n {
                x[var] = self.rhs[i].max(0.0);
            }
        }
        x
    }
}
