//! Exact transportation solver: network simplex on the complete bipartite
//! graph, specialized to dense cost matrices.
//!
//! Sources and sinks hang off a virtual root through high-cost artificial
//! arcs, which doubles as phase 1. The entering arc is picked by block
//! search over the cost matrix; the basis is a spanning tree kept as parent
//! pointers and rebuilt (with node potentials) after every pivot. Supplies
//! are perturbed by distinct tiny amounts to keep degenerate instances from
//! cycling, and the final basic flows are recomputed on the optimal tree
//! from the unperturbed marginals, so returned plans satisfy the marginals
//! to machine precision.

use std::time::Instant;

use ndarray::Array2;

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::plan::{SolveReport, TransportPlan};

/// Reduced-cost optimality tolerance.
const RC_TOL: f64 = 1e-9;
/// Artificial arcs below this flow count as empty at extraction.
const ART_FLOW_TOL: f64 = 1e-9;

/// Minimizes `⟨C, Π⟩` over couplings of `μ` and `ν`, returning an optimal
/// vertex of the transportation polytope.
pub fn solve_transport(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
) -> Result<(TransportPlan, SolveReport)> {
    if cost.nrows() != mu.len() || cost.ncols() != nu.len() {
        return Err(Error::ShapeMismatch {
            expected: (mu.len(), nu.len()),
            got: (cost.nrows(), cost.ncols()),
        });
    }
    let start = Instant::now();
    let n = mu.len();
    let m = nu.len();

    let mut solver = NetworkSimplex::new(cost.values().to_owned(), n, m);
    let pivots = solver.run(mu.weights().as_slice().unwrap(), nu.weights().as_slice().unwrap())?;
    let plan = solver.extract_plan(mu.weights().as_slice().unwrap(), nu.weights().as_slice().unwrap())?;

    let mut row_res = 0.0;
    for i in 0..n {
        row_res += (plan.row(i).sum() - mu.weights()[i]).abs();
    }
    let mut col_res = 0.0;
    for j in 0..m {
        col_res += (plan.column(j).sum() - nu.weights()[j]).abs();
    }
    let objective = plan
        .iter()
        .zip(cost.values().iter())
        .map(|(&p, &c)| p * c)
        .sum();
    let report = SolveReport::exact(objective, pivots, row_res, col_res, start.elapsed().as_secs_f64());
    let plan = TransportPlan::new(plan, row_res, col_res)?;
    Ok((plan, report))
}

/// Node indices: sources `0..n`, sinks `n..n+m`, root `n+m`.
struct NetworkSimplex {
    cost: Array2<f64>,
    n: usize,
    m: usize,
    big: f64,
    // tree arc from node v to parent[v]: (cost, flow, points_up)
    // points_up == true means the canonical arc direction is v → parent[v].
    parent: Vec<usize>,
    arc_cost: Vec<f64>,
    arc_flow: Vec<f64>,
    arc_up: Vec<bool>,
    potential: Vec<f64>,
    order: Vec<usize>, // BFS order from the root
    scan_from: usize,
    // scratch buffers reused across pivots
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
}

const NO_NODE: usize = usize::MAX;

impl NetworkSimplex {
    fn new(cost: Array2<f64>, n: usize, m: usize) -> Self {
        let nodes = n + m + 1;
        let max_cost = cost.iter().copied().fold(0.0, f64::max);
        Self {
            cost,
            n,
            m,
            big: (max_cost + 1.0) * (n + m) as f64,
            parent: vec![NO_NODE; nodes],
            arc_cost: vec![0.0; nodes],
            arc_flow: vec![0.0; nodes],
            arc_up: vec![false; nodes],
            potential: vec![0.0; nodes],
            order: Vec::with_capacity(nodes),
            scan_from: 0,
            children: vec![Vec::new(); nodes],
            depth: vec![0; nodes],
        }
    }

    fn root(&self) -> usize {
        self.n + self.m
    }

    fn init_star(&mut self, mu: &[f64], nu: &[f64]) {
        let root = self.root();
        // Perturbed supplies keep degenerate ratio ties apart; the extra mass
        // is absorbed by the last sink so the problem stays balanced.
        let delta = 1e-12 / self.n as f64;
        for i in 0..self.n {
            self.parent[i] = root;
            self.arc_cost[i] = self.big;
            self.arc_flow[i] = mu[i] + (i + 1) as f64 * delta;
            self.arc_up[i] = true; // source → root
        }
        let extra = delta * (self.n * (self.n + 1)) as f64 / 2.0;
        for j in 0..self.m {
            let v = self.n + j;
            self.parent[v] = root;
            self.arc_cost[v] = self.big;
            self.arc_flow[v] = nu[j] + if j == self.m - 1 { extra } else { 0.0 };
            self.arc_up[v] = false; // root → sink
        }
        self.rebuild();
    }

    /// Recomputes BFS order and node potentials from the parent structure.
    /// Tree arcs have zero reduced cost: for canonical u→v,
    /// `π(v) = c + π(u)`.
    fn rebuild(&mut self) {
        let nodes = self.n + self.m + 1;
        let root = self.root();
        for c in &mut self.children {
            c.clear();
        }
        for v in 0..nodes {
            if v != root {
                self.children[self.parent[v]].push(v);
            }
        }
        self.order.clear();
        self.order.push(root);
        self.potential[root] = 0.0;
        self.depth[root] = 0;
        let mut head = 0;
        while head < self.order.len() {
            let u = self.order[head];
            head += 1;
            for idx in 0..self.children[u].len() {
                let v = self.children[u][idx];
                self.potential[v] = if self.arc_up[v] {
                    // canonical v → u: 0 = c + π(v) − π(u)
                    self.potential[u] - self.arc_cost[v]
                } else {
                    self.arc_cost[v] + self.potential[u]
                };
                self.depth[v] = self.depth[u] + 1;
                self.order.push(v);
            }
        }
        debug_assert_eq!(self.order.len(), nodes);
    }

    /// Most negative reduced-cost real arc in a block, advancing a rolling
    /// cursor across the flattened cost matrix.
    fn find_entering(&mut self) -> Option<(usize, usize)> {
        let total = self.n * self.m;
        let block = (total as f64).sqrt().ceil() as usize + 16;
        let mut scanned = 0;
        let mut cursor = self.scan_from;
        while scanned < total {
            let mut best: Option<(usize, usize)> = None;
            let mut best_rc = -RC_TOL;
            let end = (scanned + block).min(total);
            while scanned < end {
                let i = cursor / self.m;
                let j = cursor % self.m;
                let rc = self.cost[[i, j]] + self.potential[i] - self.potential[self.n + j];
                if rc < best_rc {
                    best_rc = rc;
                    best = Some((i, j));
                }
                cursor += 1;
                if cursor == total {
                    cursor = 0;
                }
                scanned += 1;
            }
            if best.is_some() {
                self.scan_from = cursor;
                return best;
            }
        }
        None
    }

    /// Pivot on the entering real arc source `i` → sink `j`.
    fn pivot(&mut self, i: usize, j: usize) {
        let s = i;
        let t = self.n + j;

        // Walk both endpoints up to the least common ancestor. σ = +1 means
        // the cycle traverses the tree arc in its canonical direction (flow
        // increases with θ).
        let mut s_path: Vec<usize> = Vec::new(); // nodes whose pred-arc lies on the s-side
        let mut t_path: Vec<usize> = Vec::new();
        let (mut a, mut b) = (s, t);
        while self.depth[a] > self.depth[b] {
            s_path.push(a);
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            t_path.push(b);
            b = self.parent[b];
        }
        while a != b {
            s_path.push(a);
            t_path.push(b);
            a = self.parent[a];
            b = self.parent[b];
        }

        // Cycle direction: s --(entering)--> t --up--> lca --down--> s.
        // t-side arcs are traversed child→parent, s-side arcs parent→child.
        let sigma = |up: bool, on_t_side: bool| -> f64 {
            match (up, on_t_side) {
                (true, true) | (false, false) => 1.0,
                _ => -1.0,
            }
        };

        let mut theta = f64::INFINITY;
        let mut leaving: Option<(usize, bool)> = None; // (node, on t-side)
        for &v in &t_path {
            if sigma(self.arc_up[v], true) < 0.0 && self.arc_flow[v] < theta {
                theta = self.arc_flow[v];
                leaving = Some((v, true));
            }
        }
        for &v in &s_path {
            if sigma(self.arc_up[v], false) < 0.0 && self.arc_flow[v] < theta {
                theta = self.arc_flow[v];
                leaving = Some((v, false));
            }
        }
        let (leaving, on_t_side) = leaving.expect("cycle must contain a reverse arc");
        let theta = theta.max(0.0);

        for &v in &t_path {
            self.arc_flow[v] += sigma(self.arc_up[v], true) * theta;
        }
        for &v in &s_path {
            self.arc_flow[v] += sigma(self.arc_up[v], false) * theta;
        }

        // Re-root the piece of tree between the entering arc's endpoint and
        // the leaving arc: the chain end → … → leaving flips direction and
        // the entering arc becomes `end`'s pred-arc.
        let (end, other_end) = if on_t_side { (t, s) } else { (s, t) };
        let mut chain = Vec::new();
        let mut v = end;
        loop {
            chain.push(v);
            if v == leaving {
                break;
            }
            v = self.parent[v];
        }
        // canonical direction of the entering arc is source → sink, so as
        // `end`'s pred-arc it points up exactly when `end` is the source
        let mut prev_arc = (self.cost[[i, j]], theta, end == s);
        let mut prev_parent = other_end;
        for &u in &chain {
            let saved = (self.arc_cost[u], self.arc_flow[u], self.arc_up[u]);
            self.parent[u] = prev_parent;
            self.arc_cost[u] = prev_arc.0;
            self.arc_flow[u] = prev_arc.1;
            self.arc_up[u] = prev_arc.2;
            // the saved arc connected u → old parent; viewed from the old
            // parent it points the opposite way
            prev_arc = (saved.0, saved.1, !saved.2);
            prev_parent = u;
        }

        self.rebuild();
    }

    fn run(&mut self, mu: &[f64], nu: &[f64]) -> Result<usize> {
        self.init_star(mu, nu);
        let limit = 1000 + 50 * (self.n + self.m);
        let mut pivots = 0;
        while let Some((i, j)) = self.find_entering() {
            pivots += 1;
            if pivots > limit {
                return Err(Error::PivotLimit(limit));
            }
            self.pivot(i, j);
        }
        Ok(pivots)
    }

    /// Exact basic flows for the unperturbed marginals on the final tree,
    /// peeling leaves in reverse BFS order.
    fn extract_plan(&self, mu: &[f64], nu: &[f64]) -> Result<Array2<f64>> {
        let root = self.root();
        let mut excess = vec![0.0; self.parent.len()];
        for i in 0..self.n {
            excess[i] = mu[i];
        }
        for j in 0..self.m {
            excess[self.n + j] = -nu[j];
        }
        let mut plan = Array2::<f64>::zeros((self.n, self.m));
        for &v in self.order.iter().rev() {
            if v == root {
                continue;
            }
            let p = self.parent[v];
            let flow = if self.arc_up[v] { excess[v] } else { -excess[v] };
            if flow < -1e-9 {
                return Err(Error::Infeasible);
            }
            let flow = flow.max(0.0);
            let (src, snk) = if self.arc_up[v] { (v, p) } else { (p, v) };
            if src < self.n && snk >= self.n && snk < root {
                plan[[src, snk - self.n]] = flow;
            } else if flow > ART_FLOW_TOL {
                // an artificial arc still carries mass: balanced inputs make
                // this unreachable
                return Err(Error::Infeasible);
            }
            excess[p] += excess[v];
        }
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostSpec;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array1};

    fn measure(points: Array2<f64>, weights: Option<Array1<f64>>) -> DiscreteMeasure {
        DiscreteMeasure::new(points, weights).unwrap()
    }

    #[test]
    fn identity_matching() {
        let mu = measure(array![[0.0], [1.0]], None);
        let cost =
            CostMatrix::from_values(array![[0.0, 1.0], [1.0, 0.0]], CostSpec::SquaredEuclidean)
                .unwrap();
        let (plan, report) = solve_transport(&mu, &mu, &cost).unwrap();
        assert_abs_diff_eq!(report.objective, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(plan.mass()[[0, 0]], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(plan.mass()[[1, 1]], 0.5, epsilon = 1e-12);
    }

    /// Oracle for the 2×2 polytope: plans are a one-parameter family
    /// Π(a) = [[a, μ₁−a], [ν₁−a, ...]]; sweep it.
    fn brute_force_2x2(mu: &[f64; 2], nu: &[f64; 2], c: &Array2<f64>) -> f64 {
        let lo = (mu[0] - nu[1]).max(0.0);
        let hi = mu[0].min(nu[0]);
        let mut best = f64::INFINITY;
        let steps = 20_000;
        for k in 0..=steps {
            let a = lo + (hi - lo) * k as f64 / steps as f64;
            let plan = [
                [a, mu[0] - a],
                [nu[0] - a, mu[1] - (nu[0] - a)],
            ];
            let mut obj = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    obj += plan[i][j] * c[[i, j]];
                }
            }
            best = best.min(obj);
        }
        best
    }

    #[test]
    fn lopsided_two_by_two() {
        let mu = measure(array![[0.0], [1.0]], Some(array![0.7, 0.3]));
        let nu = measure(array![[0.0], [1.0]], Some(array![0.5, 0.5]));
        let c = array![[0.0, 1.0], [1.0, 0.0]];
        let oracle = brute_force_2x2(&[0.7, 0.3], &[0.5, 0.5], &c);
        assert_abs_diff_eq!(oracle, 0.2, epsilon = 1e-4);

        let cost = CostMatrix::from_values(c, CostSpec::SquaredEuclidean).unwrap();
        let (plan, report) = solve_transport(&mu, &nu, &cost).unwrap();
        assert_abs_diff_eq!(report.objective, 0.2, epsilon = 1e-10);
        let expected = array![[0.5, 0.2], [0.0, 0.3]];
        for (p, e) in plan.mass().iter().zip(expected.iter()) {
            assert_abs_diff_eq!(p, e, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_cost_matrix() {
        let mu = measure(array![[0.0], [2.0], [5.0]], Some(array![0.2, 0.3, 0.5]));
        let nu = measure(array![[1.0], [4.0]], None);
        let cost =
            CostMatrix::from_values(Array2::zeros((3, 2)), CostSpec::SquaredEuclidean).unwrap();
        let (_, report) = solve_transport(&mu, &nu, &cost).unwrap();
        assert_abs_diff_eq!(report.objective, 0.0, epsilon = 1e-15);
        assert!(report.row_residual <= 1e-10);
        assert!(report.col_residual <= 1e-10);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mu = measure(array![[0.0], [1.0]], None);
        let nu = measure(array![[0.0]], None);
        let cost =
            CostMatrix::from_values(array![[0.0, 1.0], [1.0, 0.0]], CostSpec::SquaredEuclidean)
                .unwrap();
        assert!(solve_transport(&mu, &nu, &cost).is_err());
    }

    #[test]
    fn degenerate_uniform_instance() {
        // identical supports with uniform weights: massively degenerate
        let pts = Array2::from_shape_fn((40, 2), |(i, j)| ((i * 7 + j * 3) % 11) as f64);
        let mu = measure(pts.clone(), None);
        let cost = CostMatrix::from_points(pts.view(), pts.view(), CostSpec::SquaredEuclidean)
            .unwrap();
        let (_, report) = solve_transport(&mu, &mu, &cost).unwrap();
        assert_abs_diff_eq!(report.objective, 0.0, epsilon = 1e-12);
    }
}
