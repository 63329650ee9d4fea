//! Exact discrete optimal transport by the transportation simplex.
//!
//! The basis is kept as a spanning tree of m + n − 1 cells over the bipartite
//! row/column graph; zero-flow basic cells stand in for degenerate vertices,
//! so the basis never loses rank. Pricing is Dantzig's rule (most negative
//! reduced cost); after a run of degenerate pivots the solver switches to
//! Bland's smallest-index rule for entering and leaving cells, which rules out
//! cycling, and returns to Dantzig after the next pivot that moves mass.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{check_order, dist2, DiscreteDistribution};

/// Upper bound on m·n accepted by [`wp_exact`].
pub const EXACT_CELL_LIMIT: usize = 1_000_000;

const DEGENERATE_STREAK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// Optimal coupling: positive-mass cells and the total transport cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportPlan {
    pub entries: Vec<PlanEntry>,
    pub cost: f64,
}

impl TransportPlan {
    pub fn row_sums(&self, m: usize) -> Vec<f64> {
        let mut s = vec![0.0; m];
        for e in &self.entries {
            s[e.source] += e.mass;
        }
        s
    }

    pub fn column_sums(&self, n: usize) -> Vec<f64> {
        let mut s = vec![0.0; n];
        for e in &self.entries {
            s[e.target] += e.mass;
        }
        s
    }
}

/// W_p by exact optimal transport with cost ‖y_i − y_j‖^p.
///
/// Returns the distance (the optimum raised to 1/p) and an optimal plan whose
/// `cost` is the optimum itself.
pub fn wp_exact(
    a: &DiscreteDistribution,
    b: &DiscreteDistribution,
    p: f64,
) -> Result<(f64, TransportPlan)> {
    check_order(p)?;
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let (m, n) = (a.len(), b.len());
    if m.saturating_mul(n) > EXACT_CELL_LIMIT {
        return Err(Error::SizeGuard(m * n));
    }
    let mut cost = Vec::with_capacity(m * n);
    for ya in a.atoms().rows() {
        for yb in b.atoms().rows() {
            let d = dist2(ya, yb).sqrt();
            cost.push(if p == 1.0 { d } else { d.powf(p) });
        }
    }
    let plan = solve_transport(a.weights(), b.weights(), &cost)?;
    Ok((plan.cost.max(0.0).powf(1.0 / p), plan))
}

/// Solve min Σ c_ij x_ij subject to row sums `supply`, column sums `demand`,
/// x ≥ 0. `cost` is row-major m × n.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportPlan> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(Error::EmptySupport);
    }
    if cost.len() != m * n {
        return Err(Error::LengthMismatch { what: "cost matrix", left: cost.len(), right: m * n });
    }
    let mut s = Simplex::northwest(supply, demand, cost);
    s.optimize()?;
    Ok(s.plan())
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    flow: Vec<f64>,
    in_basis: Vec<bool>,
    basis: Vec<usize>,
    u: Vec<f64>,
    v: Vec<f64>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl<'a> Simplex<'a> {
    fn northwest(supply: &[f64], demand: &[f64], cost: &'a [f64]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut flow = vec![0.0; m * n];
        let mut in_basis = vec![false; m * n];
        let mut basis = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        let mut rs = supply[0];
        let mut rd = demand[0];
        loop {
            let x = rs.min(rd);
            let cell = i * n + j;
            flow[cell] = x;
            in_basis[cell] = true;
            basis.push(cell);
            rs -= x;
            rd -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            let go_down = if i == m - 1 {
                false
            } else if j == n - 1 {
                true
            } else {
                rs <= rd
            };
            if go_down {
                i += 1;
                rs = supply[i];
            } else {
                j += 1;
                rd = demand[j];
            }
        }
        debug_assert_eq!(basis.len(), m + n - 1);
        Simplex {
            m,
            n,
            cost,
            flow,
            in_basis,
            basis,
            u: vec![0.0; m],
            v: vec![0.0; n],
            adj: vec![Vec::new(); m + n],
        }
    }

    fn rebuild_tree(&mut self) {
        for a in &mut self.adj {
            a.clear();
        }
        for &cell in &self.basis {
            let (i, j) = (cell / self.n, cell % self.n);
            self.adj[i].push((self.m + j, cell));
            self.adj[self.m + j].push((i, cell));
        }
    }

    fn potentials(&mut self) {
        let total = self.m + self.n;
        let mut seen = vec![false; total];
        let mut stack = vec![0usize];
        seen[0] = true;
        self.u[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &(next, cell) in &self.adj[node] {
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                let c = self.cost[cell];
                if next >= self.m {
                    self.v[next - self.m] = c - self.u[node];
                } else {
                    self.u[next] = c - self.v[node - self.m];
                }
                stack.push(next);
            }
        }
        debug_assert!(seen.iter().all(|&s| s), "basis is not spanning");
    }

    /// Basic cells on the tree path from row `i` to column `j`, starting at row `i`.
    fn path(&self, i: usize, j: usize) -> Vec<usize> {
        let total = self.m + self.n;
        let target = self.m + j;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; total];
        let mut seen = vec![false; total];
        let mut queue = std::collections::VecDeque::from([i]);
        seen[i] = true;
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &(next, cell) in &self.adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, cell));
                    queue.push_back(next);
                }
            }
        }
        let mut cells = Vec::new();
        let mut node = target;
        while let Some((prev, cell)) = parent[node] {
            cells.push(cell);
            node = prev;
        }
        cells.reverse();
        cells
    }

    fn optimize(&mut self) -> Result<()> {
        let scale = self.cost.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
        let tol = 1e-12 * scale;
        let cap = 10_000 + 50 * (self.m + self.n) * (self.m + self.n);
        let mut degenerate_run = 0usize;
        for _ in 0..cap {
            self.rebuild_tree();
            self.potentials();
            let bland = degenerate_run >= DEGENERATE_STREAK;

            let mut entering = None;
            let mut best = -tol;
            for cell in 0..self.m * self.n {
                if self.in_basis[cell] {
                    continue;
                }
                let (i, j) = (cell / self.n, cell % self.n);
                let r = self.cost[cell] - self.u[i] - self.v[j];
                if r < best {
                    entering = Some(cell);
                    if bland {
                        break;
                    }
                    best = r;
                }
            }
            let Some(enter) = entering else {
                return Ok(());
            };

            let (ei, ej) = (enter / self.n, enter % self.n);
            let cycle = self.path(ei, ej);
            // cells at even positions lose mass, odd positions gain it
            let mut leave = cycle[0];
            let mut theta = self.flow[leave];
            for &cell in cycle.iter().step_by(2) {
                let f = self.flow[cell];
                if f < theta || (f == theta && cell < leave) {
                    theta = f;
                    leave = cell;
                }
            }
            for (k, &cell) in cycle.iter().enumerate() {
                if k % 2 == 0 {
                    self.flow[cell] -= theta;
                } else {
                    self.flow[cell] += theta;
                }
            }
            self.flow[leave] = 0.0;
            self.flow[enter] = theta;
            self.in_basis[leave] = false;
            self.in_basis[enter] = true;
            let pos = self.basis.iter().position(|&c| c == leave).expect("leaving cell is basic");
            self.basis[pos] = enter;

            degenerate_run = if theta > 0.0 { 0 } else { degenerate_run + 1 };
        }
        Err(Error::NotConverged { routine: "transportation simplex", iterations: cap })
    }

    fn plan(&self) -> TransportPlan {
        let mut cells: Vec<usize> = self.basis.iter().copied().filter(|&c| self.flow[c] > 0.0).collect();
        cells.sort_unstable();
        let entries: Vec<PlanEntry> = cells
            .iter()
            .map(|&c| PlanEntry { source: c / self.n, target: c % self.n, mass: self.flow[c] })
            .collect();
        let cost = cells.iter().map(|&c| self.flow[c] * self.cost[c]).sum();
        TransportPlan { entries, cost }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Points;

    #[test]
    fn single_pair() {
        let a = DiscreteDistribution::dirac(&[0.0, 0.0]).unwrap();
        let b = DiscreteDistribution::dirac(&[3.0, 4.0]).unwrap();
        let (d, plan) = wp_exact(&a, &b, 2.0).unwrap();
        assert!((d - 5.0).abs() < 1e-14);
        assert_eq!(plan.entries.len(), 1);
        assert!((plan.cost - 25.0).abs() < 1e-12);
    }

    #[test]
    fn classic_degenerate_instance() {
        // equal supplies and demands force degenerate northwest steps
        let supply = [0.25, 0.25, 0.25, 0.25];
        let demand = [0.25, 0.25, 0.25, 0.25];
        let cost = [
            4.0, 1.0, 3.0, 2.0, //
            2.0, 4.0, 1.0, 3.0, //
            3.0, 2.0, 4.0, 1.0, //
            1.0, 3.0, 2.0, 4.0,
        ];
        let plan = solve_transport(&supply, &demand, &cost).unwrap();
        assert!((plan.cost - 1.0).abs() < 1e-12);
        for s in plan.row_sums(4).iter().chain(plan.column_sums(4).iter()) {
            assert!((s - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn size_guard_and_dims() {
        let one = DiscreteDistribution::dirac(&[0.5]).unwrap();
        let pts: Vec<f64> = (0..1001).map(|i| i as f64).collect();
        let many = DiscreteDistribution::uniform(Points::from_scalars(&pts).unwrap()).unwrap();
        assert!(wp_exact(&one, &many, 1.0).is_ok());
        assert!(matches!(wp_exact(&many, &many, 1.0), Err(Error::SizeGuard(_))));
        let two = DiscreteDistribution::dirac(&[0.0, 0.0]).unwrap();
        assert!(matches!(wp_exact(&one, &two, 1.0), Err(Error::DimensionMismatch { .. })));
    }
}
