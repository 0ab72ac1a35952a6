//! Exact optimal transport by the network simplex method on the complete
//! bipartite transportation graph.
//!
//! Zero-mass bins are dropped before solving. Supplies are perturbed in the
//! classical way (`a_i + eps`, last demand `+ m * eps`) so that every basis
//! visited is nondegenerate; once the optimal tree is found its flows are
//! recomputed from the unperturbed marginals. Entering arcs are priced by
//! block search, switching to Bland's rule after a pivot budget.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure_dim, Error, Result};
use crate::histogram::Histogram;
use crate::linalg::Matrix;
use crate::metric::CostMatrix;
use crate::transport::TransportPlan;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct EmdConfig {
    /// Pivots priced by block search before falling back to Bland's rule.
    pub bland_after: usize,
    /// Hard cap on pivots; exceeding it is reported as an error.
    pub max_pivots: usize,
}

impl EmdConfig {
    fn for_size(m: usize, n: usize) -> Self {
        let bland_after = 200 * (m + n) + 10_000;
        Self { bland_after, max_pivots: bland_after + 20 * m * n + 100_000 }
    }
}

#[derive(Debug, Clone)]
pub struct EmdSolution {
    /// Optimal transport cost `<P*, M>`.
    pub cost: f64,
    pub plan: TransportPlan,
    /// Number of strictly positive entries of the optimal vertex.
    pub basic_support_size: usize,
    pub pivots: usize,
}

/// Solves `min <P, M>` over the transportation polytope of `(r, c)`.
pub fn solve_emd(r: &Histogram, c: &Histogram, m: &CostMatrix) -> Result<EmdSolution> {
    solve_emd_with(r, c, m, None)
}

pub fn solve_emd_with(
    r: &Histogram,
    c: &Histogram,
    m: &CostMatrix,
    config: Option<&EmdConfig>,
) -> Result<EmdSolution> {
    let d = m.dim();
    ensure_dim(d, r.dim())?;
    ensure_dim(d, c.dim())?;
    let sources = r.support();
    let sinks = c.support();
    let (ns, nt) = (sources.len(), sinks.len());
    let cost: Vec<f64> = sources
        .iter()
        .flat_map(|&i| sinks.iter().map(move |&j| m.get(i, j)))
        .collect();
    let supply: Vec<f64> = sources.iter().map(|&i| r.weights()[i]).collect();
    let demand: Vec<f64> = sinks.iter().map(|&j| c.weights()[j]).collect();

    let default_cfg;
    let cfg = match config {
        Some(cfg) => cfg,
        None => {
            default_cfg = EmdConfig::for_size(ns, nt);
            &default_cfg
        }
    };

    let mut solver = Simplex::new(ns, nt, cost, &supply, &demand, 1e-12 / d as f64);
    solver.run(cfg)?;
    let flows = solver.flows_for(&supply, &demand);

    let mut plan = Matrix::zeros(d, d);
    let mut total = 0.0;
    let mut support = 0;
    for (slot, &(s, t)) in solver.arcs.iter().enumerate() {
        let f = flows[slot];
        if f > 0.0 {
            let (i, j) = (sources[s as usize], sinks[t as usize]);
            plan[(i, j)] += f;
            total += f * m.get(i, j);
            support += 1;
        }
    }
    Ok(EmdSolution {
        cost: total,
        plan: TransportPlan::from_entries_unchecked(plan),
        basic_support_size: support,
        pivots: solver.pivots,
    })
}

/// Spanning-tree basis of the `m x n` transportation problem. Nodes
/// `0..m` are sources and `m..m + n` sinks.
struct Simplex {
    m: usize,
    n: usize,
    cost: Vec<f64>,
    supply: Vec<f64>,
    demand: Vec<f64>,
    /// basic arcs `(source, sink)`, one per tree edge
    arcs: Vec<(u32, u32)>,
    /// arc index `i * n + j` -> basis slot, or `NONE`
    slot_of: Vec<u32>,
    adj: Vec<Vec<u32>>,
    parent: Vec<u32>,
    parent_slot: Vec<u32>,
    depth: Vec<u32>,
    order: Vec<u32>,
    potential: Vec<f64>,
    flow: Vec<f64>,
    net: Vec<f64>,
    pivots: usize,
    next_arc: usize,
    tol: f64,
}

impl Simplex {
    fn new(m: usize, n: usize, cost: Vec<f64>, supply: &[f64], demand: &[f64], eps: f64) -> Self {
        let nodes = m + n;
        let mut a: Vec<f64> = supply.iter().map(|x| x + eps).collect();
        let mut b = demand.to_vec();
        b[n - 1] += m as f64 * eps;
        let max_cost = cost.iter().copied().fold(0.0, f64::max);
        let mut s = Self {
            m,
            n,
            cost,
            supply: a.clone(),
            demand: b.clone(),
            arcs: Vec::with_capacity(nodes - 1),
            slot_of: vec![NONE; m * n],
            adj: vec![Vec::new(); nodes],
            parent: vec![NONE; nodes],
            parent_slot: vec![NONE; nodes],
            depth: vec![0; nodes],
            order: Vec::with_capacity(nodes),
            potential: vec![0.0; nodes],
            flow: Vec::new(),
            net: vec![0.0; nodes],
            pivots: 0,
            next_arc: 0,
            tol: 1e-12 * max_cost,
        };
        // North-west corner start.
        let (mut i, mut j) = (0, 0);
        loop {
            let f = a[i].min(b[j]);
            a[i] -= f;
            b[j] -= f;
            s.push_arc(i, j);
            if i == m - 1 && j == n - 1 {
                break;
            }
            if j == n - 1 || (i < m - 1 && a[i] <= b[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        s.flow = vec![0.0; s.arcs.len()];
        s.rebuild();
        s
    }

    fn push_arc(&mut self, i: usize, j: usize) {
        let slot = self.arcs.len() as u32;
        self.arcs.push((i as u32, j as u32));
        self.slot_of[i * self.n + j] = slot;
        self.adj[i].push(slot);
        self.adj[self.m + j].push(slot);
    }

    #[inline]
    fn other_end(&self, slot: u32, node: usize) -> usize {
        let (s, t) = self.arcs[slot as usize];
        if node == s as usize {
            self.m + t as usize
        } else {
            s as usize
        }
    }

    /// Recomputes tree order, depths, potentials and flows from scratch.
    fn rebuild(&mut self) {
        let (m, nodes) = (self.m, self.m + self.n);
        self.order.clear();
        self.order.push(0);
        self.parent[0] = NONE;
        self.parent_slot[0] = NONE;
        self.depth[0] = 0;
        self.potential[0] = 0.0;
        let mut head = 0;
        while head < self.order.len() {
            let node = self.order[head] as usize;
            head += 1;
            for k in 0..self.adj[node].len() {
                let slot = self.adj[node][k];
                if slot == self.parent_slot[node] {
                    continue;
                }
                let child = self.other_end(slot, node);
                let (s, t) = self.arcs[slot as usize];
                let c = self.cost[s as usize * self.n + t as usize];
                self.parent[child] = node as u32;
                self.parent_slot[child] = slot;
                self.depth[child] = self.depth[node] + 1;
                self.potential[child] = c - self.potential[node];
                self.order.push(child as u32);
            }
        }
        debug_assert_eq!(self.order.len(), nodes, "basis is not a spanning tree");
        let tree = Tree { m, order: &self.order, parent: &self.parent, parent_slot: &self.parent_slot };
        tree.flows(&self.supply, &self.demand, &mut self.net, &mut self.flow);
    }

    fn flows_for(&mut self, supply: &[f64], demand: &[f64]) -> Vec<f64> {
        let mut flows = vec![0.0; self.arcs.len()];
        let tree = Tree { m: self.m, order: &self.order, parent: &self.parent, parent_slot: &self.parent_slot };
        tree.flows(supply, demand, &mut self.net, &mut flows);
        for f in &mut flows {
            debug_assert!(*f > -1e-9, "infeasible final flow {f}");
            if *f < 0.0 {
                *f = 0.0;
            }
        }
        flows
    }

    #[inline]
    fn reduced_cost(&self, arc: usize) -> f64 {
        let (i, j) = (arc / self.n, arc % self.n);
        self.cost[arc] - self.potential[i] - self.potential[self.m + j]
    }

    /// Block search: best arc within the first block containing a candidate.
    fn price_block(&mut self) -> Option<(usize, f64)> {
        let total = self.m * self.n;
        let block = (libm::sqrt(total as f64) as usize).max(16).min(total);
        let mut best = (usize::MAX, -self.tol);
        let mut arc = self.next_arc;
        for scanned in 1..=total {
            if self.slot_of[arc] == NONE {
                let rc = self.reduced_cost(arc);
                if rc < best.1 {
                    best = (arc, rc);
                }
            }
            arc += 1;
            if arc == total {
                arc = 0;
            }
            if scanned % block == 0 && best.0 != usize::MAX {
                break;
            }
        }
        self.next_arc = arc;
        (best.0 != usize::MAX).then_some(best)
    }

    /// Bland's rule: lowest-index arc with negative reduced cost.
    fn price_bland(&self) -> Option<(usize, f64)> {
        (0..self.m * self.n).filter(|&a| self.slot_of[a] == NONE).map(|a| (a, self.reduced_cost(a))).find(|&(_, rc)| rc < -self.tol)
    }

    fn run(&mut self, cfg: &EmdConfig) -> Result<()> {
        loop {
            let bland = self.pivots >= cfg.bland_after;
            let entering = if bland { self.price_bland() } else { self.price_block() };
            let Some((arc, rc)) = entering else {
                return Ok(());
            };
            if self.pivots >= cfg.max_pivots {
                return Err(Error::PivotLimit { pivots: self.pivots, reduced_cost: rc });
            }
            self.pivot(arc);
            self.pivots += 1;
        }
    }

    fn pivot(&mut self, arc: usize) {
        let (p, q) = (arc / self.n, self.m + arc % self.n);
        let m = self.m;
        // Leaving arc: smallest flow among the arcs the cycle decreases; ties
        // go to the lowest arc index.
        let mut leave: (u32, f64, usize) = (NONE, f64::INFINITY, usize::MAX);
        let mut consider = |slot: u32, decreasing: bool, arcs: &[(u32, u32)], flow: &[f64], n: usize| {
            if decreasing {
                let f = flow[slot as usize];
                let (s, t) = arcs[slot as usize];
                let idx = s as usize * n + t as usize;
                if f < leave.1 || (f == leave.1 && idx < leave.2) {
                    leave = (slot, f, idx);
                }
            }
        };
        let (mut a, mut b) = (p, q);
        while a != b {
            if self.depth[a] >= self.depth[b] {
                // source side, traversed parent -> child: decreases into a source
                consider(self.parent_slot[a], a < m, &self.arcs, &self.flow, self.n);
                a = self.parent[a] as usize;
            } else {
                // sink side, traversed child -> parent: decreases out of a sink
                consider(self.parent_slot[b], b >= m, &self.arcs, &self.flow, self.n);
                b = self.parent[b] as usize;
            }
        }
        let slot = leave.0;
        debug_assert_ne!(slot, NONE, "no leaving arc on the pivot cycle");
        let (s_old, t_old) = self.arcs[slot as usize];
        self.slot_of[s_old as usize * self.n + t_old as usize] = NONE;
        remove_slot(&mut self.adj[s_old as usize], slot);
        remove_slot(&mut self.adj[m + t_old as usize], slot);
        self.arcs[slot as usize] = (p as u32, (q - m) as u32);
        self.slot_of[arc] = slot;
        self.adj[p].push(slot);
        self.adj[q].push(slot);
        self.rebuild();
    }
}

struct Tree<'a> {
    m: usize,
    order: &'a [u32],
    parent: &'a [u32],
    parent_slot: &'a [u32],
}

impl Tree<'_> {
    /// Tree flows induced by the given supplies and demands: the flow on the
    /// edge above a node is the net supply of its subtree.
    fn flows(&self, supply: &[f64], demand: &[f64], net: &mut [f64], flow: &mut [f64]) {
        let m = self.m;
        net[..m].copy_from_slice(supply);
        for (j, &b) in demand.iter().enumerate() {
            net[m + j] = -b;
        }
        for &node in self.order[1..].iter().rev() {
            let node = node as usize;
            let s = net[node];
            flow[self.parent_slot[node] as usize] = if node < m { s } else { -s };
            net[self.parent[node] as usize] += s;
        }
    }
}

fn remove_slot(list: &mut Vec<u32>, slot: u32) {
    if let Some(pos) = list.iter().position(|&s| s == slot) {
        list.swap_remove(pos);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_histograms_cost_nothing() {
        let r = Histogram::new(alloc::vec![0.2, 0.5, 0.3]).unwrap();
        let m = CostMatrix::from_rows(&[[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]]).unwrap();
        let sol = solve_emd(&r, &r, &m).unwrap();
        assert!(sol.cost.abs() < 1e-12);
        for i in 0..3 {
            assert!((sol.plan.entries()[(i, i)] - r.weights()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn forced_transport() {
        let r = Histogram::point_mass(2, 0).unwrap();
        let c = Histogram::point_mass(2, 1).unwrap();
        let m = CostMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let sol = solve_emd(&r, &c, &m).unwrap();
        assert_eq!(sol.cost, 1.0);
        assert_eq!(sol.plan.entries(), &Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap());
        assert_eq!(sol.basic_support_size, 1);
    }

    #[test]
    fn zero_bins_are_reinserted() {
        let r = Histogram::new(alloc::vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        let c = Histogram::new(alloc::vec![0.25, 0.0, 0.25, 0.5]).unwrap();
        let m = CostMatrix::new(Matrix::from_fn(4, 4, |i, j| (i as f64 - j as f64).abs())).unwrap();
        let sol = solve_emd(&r, &c, &m).unwrap();
        assert!(sol.plan.marginal_violation(&r, &c) < 1e-12);
        // CDFs [0, .5, 1, 1] and [.25, .25, .5, 1]
        assert!((sol.cost - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let r = Histogram::uniform(3).unwrap();
        let m = CostMatrix::new(Matrix::zeros(2, 2)).unwrap();
        assert!(matches!(solve_emd(&r, &r, &m), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn pivot_limit_is_reported() {
        let r = Histogram::new(alloc::vec![0.7, 0.2, 0.1]).unwrap();
        let c = Histogram::new(alloc::vec![0.1, 0.2, 0.7]).unwrap();
        let m = CostMatrix::new(Matrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 1.0 + (i + 2 * j) as f64 })).unwrap();
        let cfg = EmdConfig { bland_after: 0, max_pivots: 0 };
        assert!(matches!(solve_emd_with(&r, &c, &m, Some(&cfg)), Err(Error::PivotLimit { .. })));
        // Bland-only pricing still reaches the optimum.
        let bland = EmdConfig { bland_after: 0, max_pivots: 1000 };
        let a = solve_emd_with(&r, &c, &m, Some(&bland)).unwrap();
        let b = solve_emd(&r, &c, &m).unwrap();
        assert!((a.cost - b.cost).abs() < 1e-12);
    }
}
