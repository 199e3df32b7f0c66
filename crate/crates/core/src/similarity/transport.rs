//! Exact solver for the balanced transportation problem.
//!
//! Primal transportation simplex: the basis is a spanning tree of the
//! bipartite supply/demand graph, seeded by the north-west corner rule.
//! Each pivot prices the non-basic cells with the tree potentials
//! `u_i + v_j = c_ij`, brings in the first cell with negative reduced cost
//! and pushes flow around the cycle it closes. Entering and leaving cells
//! are chosen by lowest index, which rules out cycling on degenerate bases.

use std::collections::VecDeque;

use crate::error::{Error, Result};

const MARGINAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    supply: Vec<f64>,
    demand: Vec<f64>,
    /// Row-major `supply.len() × demand.len()`.
    cost: Vec<f64>,
}

impl TransportProblem {
    pub fn new(supply: Vec<f64>, demand: Vec<f64>, cost: Vec<f64>) -> Result<Self> {
        if supply.is_empty() || demand.is_empty() {
            return Err(Error::InvalidParameter("transport problem has an empty side".into()));
        }
        if cost.len() != supply.len() * demand.len() {
            return Err(Error::InvalidParameter(format!(
                "cost matrix has {} entries, expected {}x{}",
                cost.len(),
                supply.len(),
                demand.len()
            )));
        }
        let bad = |x: &f64| !x.is_finite() || *x < 0.0;
        if supply.iter().chain(&demand).any(bad) {
            return Err(Error::InvalidParameter(
                "weights must be finite and non-negative".into(),
            ));
        }
        if cost.iter().any(bad) {
            return Err(Error::InvalidParameter("costs must be finite and non-negative".into()));
        }
        let supply_total: f64 = supply.iter().sum();
        let demand_total: f64 = demand.iter().sum();
        if (supply_total - 1.0).abs() > MARGINAL_TOLERANCE || (demand_total - 1.0).abs() > MARGINAL_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "weights must each sum to 1 (supply {supply_total}, demand {demand_total})"
            )));
        }
        Ok(Self { supply, demand, cost })
    }

    pub fn rows(&self) -> usize {
        self.supply.len()
    }

    pub fn cols(&self) -> usize {
        self.demand.len()
    }

    pub fn supply(&self) -> &[f64] {
        &self.supply
    }

    pub fn demand(&self) -> &[f64] {
        &self.demand
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.cols() + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    cols: usize,
    /// Row-major flow matrix.
    pub flow: Vec<f64>,
    pub cost: f64,
}

impl TransportSolution {
    pub fn flow(&self, i: usize, j: usize) -> f64 {
        self.flow[i * self.cols + j]
    }
}

/// Optimal flow and its cost `Σ flowᵢⱼ · costᵢⱼ`.
pub fn solve_transport(problem: &TransportProblem) -> Result<TransportSolution> {
    let (m, n) = (problem.rows(), problem.cols());
    let mut flow = vec![0.0; m * n];
    let mut basic = vec![false; m * n];

    // North-west corner: a monotone staircase visits exactly m + n - 1 cells.
    let mut supply_left = problem.supply.clone();
    let mut demand_left = problem.demand.clone();
    let (mut i, mut j) = (0, 0);
    loop {
        let amount = supply_left[i].min(demand_left[j]);
        flow[i * n + j] = amount;
        basic[i * n + j] = true;
        supply_left[i] -= amount;
        demand_left[j] -= amount;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if j == n - 1 || (i < m - 1 && supply_left[i] <= demand_left[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }

    let scale = problem.cost.iter().fold(1.0f64, |a, &c| a.max(c));
    let tolerance = 1e-12 * scale;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    // Tree adjacency: nodes 0..m are rows, m..m+n are columns.
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); m + n];

    loop {
        for list in &mut adjacency {
            list.clear();
        }
        for cell in (0..m * n).filter(|&c| basic[c]) {
            let (r, c) = (cell / n, cell % n);
            adjacency[r].push(m + c);
            adjacency[m + c].push(r);
        }
        compute_potentials(problem, &adjacency, &mut u, &mut v);

        let entering =
            (0..m * n).find(|&cell| !basic[cell] && problem.cost[cell] - u[cell / n] - v[cell % n] < -tolerance);
        let Some(entering) = entering else { break };
        let (er, ec) = (entering / n, entering % n);

        // Tree path from the entering column back to the entering row.
        let path = tree_path(&adjacency, m + ec, er);
        let cycle: Vec<usize> = path
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                a * n + (b - m)
            })
            .collect();
        // Cells alternate -, +, -, ... starting next to the entering column.
        let theta = cycle.iter().step_by(2).map(|&c| flow[c]).fold(f64::INFINITY, f64::min);
        let leaving = cycle
            .iter()
            .step_by(2)
            .copied()
            .filter(|&c| flow[c] == theta)
            .min()
            .expect("cycle has a decreasing cell");
        for (k, &cell) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                flow[cell] -= theta;
            } else {
                flow[cell] += theta;
            }
        }
        flow[entering] += theta;
        flow[leaving] = 0.0;
        basic[leaving] = false;
        basic[entering] = true;
    }

    let cost = flow.iter().zip(&problem.cost).map(|(f, c)| f * c).sum();
    Ok(TransportSolution { cols: n, flow, cost })
}

fn compute_potentials(problem: &TransportProblem, adjacency: &[Vec<usize>], u: &mut [f64], v: &mut [f64]) {
    let m = u.len();
    let mut seen = vec![false; adjacency.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    u[0] = 0.0;
    while let Some(node) = queue.pop_front() {
        for &next in &adjacency[node] {
            if seen[next] {
                continue;
            }
            seen[next] = true;
            if node < m {
                v[next - m] = problem.cost(node, next - m) - u[node];
            } else {
                u[next] = problem.cost(next, node - m) - v[node - m];
            }
            queue.push_back(next);
        }
    }
}

fn tree_path(adjacency: &[Vec<usize>], from: usize, to: usize) -> Vec<usize> {
    let mut parent = vec![usize::MAX; adjacency.len()];
    parent[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(node) = queue.pop_front() {
        if node == to {
            break;
        }
        for &next in &adjacency[node] {
            if parent[next] == usize::MAX {
                parent[next] = node;
                queue.push_back(next);
            }
        }
    }
    let mut path = vec![to];
    let mut node = to;
    while node != from {
        node = parent[node];
        path.push(node);
    }
    path.reverse();
    path
}
