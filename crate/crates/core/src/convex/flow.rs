//! Approximate maximum flow on undirected unit-capacity graphs.
//!
//! Each edge carries a signed flow relative to a fixed orientation. The
//! capacity `|f_e| ≤ 1` becomes the pair of linear constraints `f_e ≤ 1` and
//! `-f_e ≤ 1`; conservation at non-terminal nodes is the ambient equality
//! set. The flow value is found by binary search over candidate targets.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::Serialize;

use crate::convex::program::{solve_cp, CpOptions, CpReport, LinearConstraints, Rounds, SmoothCP};
use crate::convex::projection::AffineConstraints;
use crate::error::{check_len, invalid, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowNetwork {
    nodes: usize,
    edges: Vec<(usize, usize)>,
    source: usize,
    sink: usize,
}

impl FlowNetwork {
    /// Nodes and edge endpoints are 0-indexed; edge `(u, v)` is oriented `u → v`.
    pub fn new(
        nodes: usize,
        edges: Vec<(usize, usize)>,
        source: usize,
        sink: usize,
    ) -> Result<Self> {
        if source >= nodes || sink >= nodes {
            return Err(invalid(format!(
                "terminals must be below the node count {nodes}"
            )));
        }
        if source == sink {
            return Err(invalid("source and sink must differ"));
        }
        for (k, &(u, v)) in edges.iter().enumerate() {
            if u >= nodes || v >= nodes {
                return Err(invalid(format!(
                    "edge {k} has an endpoint outside 0..{nodes}"
                )));
            }
            if u == v {
                return Err(invalid(format!("edge {k} is a self-loop")));
            }
        }
        Ok(Self {
            nodes,
            edges,
            source,
            sink,
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .filter(|(u, v)| *u == node || *v == node)
            .count()
    }

    /// Whether the sink is reachable from the source.
    pub fn connected(&self) -> bool {
        let mut adjacency = vec![Vec::new(); self.nodes];
        for &(u, v) in &self.edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut seen = vec![false; self.nodes];
        let mut queue = VecDeque::from([self.source]);
        seen[self.source] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen[self.sink]
    }

    /// Net outflow of `node`: `Σ_{out} f_e - Σ_{in} f_e`.
    pub fn net_outflow(&self, flows: &[f64], node: usize) -> f64 {
        self.edges
            .iter()
            .zip(flows)
            .map(|(&(u, v), f)| {
                if u == node {
                    *f
                } else if v == node {
                    -f
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Conservation at every node other than the terminals.
    pub fn conservation(&self) -> Result<AffineConstraints> {
        let mut eqs = AffineConstraints::new(self.edges.len());
        for node in (0..self.nodes).filter(|n| *n != self.source && *n != self.sink) {
            let row: Vec<(usize, f64)> = self
                .edges
                .iter()
                .enumerate()
                .filter_map(|(e, &(u, v))| {
                    if u == node {
                        Some((e, 1.0))
                    } else if v == node {
                        Some((e, -1.0))
                    } else {
                        None
                    }
                })
                .collect();
            if !row.is_empty() {
                eqs.push_row(row, 0.0)?;
            }
        }
        Ok(eqs)
    }

    /// Objective `c` with `cᵀf` the net outflow of the source.
    pub fn objective(&self) -> Vec<f64> {
        self.edges
            .iter()
            .map(|&(u, v)| {
                if u == self.source {
                    1.0
                } else if v == self.source {
                    -1.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Capacity constraints `f_e ≤ 1` then `-f_e ≤ 1`.
    pub fn capacities(&self) -> Result<LinearConstraints> {
        let d = self.edges.len();
        let mut cons = LinearConstraints::new(d);
        for e in 0..d {
            cons.push(vec![(e, 1.0)], 0.0)?;
        }
        for e in 0..d {
            cons.push(vec![(e, -1.0)], 0.0)?;
        }
        Ok(cons)
    }

    /// The program `max cᵀf` over conserved flows with unit capacities,
    /// `f₀ = 0`, `γ = 1`, `B = 2√d`.
    pub fn program(&self, target: f64) -> Result<SmoothCP> {
        let d = self.edges.len();
        SmoothCP::new(
            self.objective(),
            target,
            Arc::new(self.capacities()?),
            vec![0.0; d],
            1.0,
            2.0 * (d as f64).sqrt(),
            self.conservation()?,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowReport {
    pub value: f64,
    /// `max(max_e |f_e| - 1, 0)`
    pub max_violation: f64,
    /// Largest absolute net flow at a non-terminal node.
    pub conservation_residual: f64,
    pub node_residuals: Vec<f64>,
}

/// Value, capacity violation and conservation residuals of `flows`.
pub fn check_flow(network: &FlowNetwork, flows: &[f64]) -> Result<FlowReport> {
    check_len(network.edges().len(), flows.len())?;
    let node_residuals: Vec<f64> = (0..network.nodes())
        .map(|n| {
            if n == network.source() || n == network.sink() {
                0.0
            } else {
                network.net_outflow(flows, n)
            }
        })
        .collect();
    let conservation_residual = node_residuals.iter().fold(0.0, |m: f64, r| m.max(r.abs()));
    let max_violation = flows.iter().fold(0.0, |m: f64, f| m.max(f.abs() - 1.0));
    Ok(FlowReport {
        value: network.net_outflow(flows, network.source()),
        max_violation,
        conservation_residual,
        node_residuals,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub flows: Vec<f64>,
    pub value: f64,
    pub max_violation: f64,
    pub conservation_residual: f64,
    /// Largest accepted target `F*`.
    pub target: f64,
    /// One entry per candidate target evaluated, in order.
    pub candidates: Vec<FlowCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowCandidate {
    pub target: f64,
    pub accepted: bool,
    pub report: CpReport,
}

impl FlowSolution {
    /// Rounds summed over every candidate solve.
    pub fn total_rounds(&self) -> usize {
        self.candidates.iter().map(|c| c.report.rounds_run).sum()
    }
}

/// Binary search on the target flow value.
///
/// Unit capacities make the maximum flow an integer no larger than
/// `min(deg s, deg t)`, so only integer targets are tried, starting with that
/// upper bound. Each candidate is solved with the automatic horizon and
/// accepted when the blended point is feasible.
pub fn max_flow(network: &FlowNetwork, epsilon: f64) -> Result<FlowSolution> {
    max_flow_with(
        network,
        epsilon,
        CpOptions {
            stop_when_feasible: true,
        },
    )
}

pub fn max_flow_with(
    network: &FlowNetwork,
    epsilon: f64,
    options: CpOptions,
) -> Result<FlowSolution> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    let d = network.edges().len();
    let zero = || -> Result<FlowSolution> {
        Ok(FlowSolution {
            flows: vec![0.0; d],
            value: 0.0,
            max_violation: 0.0,
            conservation_residual: 0.0,
            target: 0.0,
            candidates: Vec::new(),
        })
    };
    if !network.connected() {
        return zero();
    }

    let base = network.program(0.0)?;
    let mut candidates = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut attempt = |target: usize| -> Result<bool> {
        let target = target as f64;
        let solution = solve_cp(&base.with_target(target)?, epsilon, Rounds::Auto, options)?;
        let accepted = solution.report.feasible;
        candidates.push(FlowCandidate {
            target,
            accepted,
            report: solution.report,
        });
        if accepted {
            best = Some((target, solution.f_hat));
        }
        Ok(accepted)
    };

    let upper = network
        .degree(network.source())
        .min(network.degree(network.sink()));
    if !attempt(upper)? {
        // invariant: lo is accepted or zero, hi is rejected
        let (mut lo, mut hi) = (0, upper);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if attempt(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    let Some((target, flows)) = best else {
        let mut out = zero()?;
        out.candidates = candidates;
        return Ok(out);
    };
    let report = check_flow(network, &flows)?;
    Ok(FlowSolution {
        flows,
        value: report.value,
        max_violation: report.max_violation,
        conservation_residual: report.conservation_residual,
        target,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_flow_examples() {
        let single = FlowNetwork::new(2, vec![(0, 1)], 0, 1).unwrap();
        let r = check_flow(&single, &[0.0]).unwrap();
        assert_eq!(
            (r.value, r.conservation_residual, r.max_violation),
            (0.0, 0.0, 0.0)
        );
        let r = check_flow(&single, &[1.0]).unwrap();
        assert_eq!((r.value, r.conservation_residual), (1.0, 0.0));
        let r = check_flow(&single, &[1.5]).unwrap();
        assert_eq!(r.max_violation, 0.5);
    }

    #[test]
    fn rejects_malformed_networks() {
        assert!(FlowNetwork::new(2, vec![(0, 0)], 0, 1).is_err());
        assert!(FlowNetwork::new(2, vec![(0, 1)], 1, 1).is_err());
        assert!(FlowNetwork::new(2, vec![(0, 2)], 0, 1).is_err());
    }

    #[test]
    fn parallel_edges() {
        let net = FlowNetwork::new(2, vec![(0, 1), (0, 1)], 0, 1).unwrap();
        let sol = max_flow(&net, 0.1).unwrap();
        assert!(sol.value >= 2.0 * 0.9, "{}", sol.value);
        assert!(sol.max_violation <= 1e-7);
    }

    #[test]
    fn path_of_three() {
        let net = FlowNetwork::new(4, vec![(0, 1), (2, 1), (2, 3)], 0, 3).unwrap();
        let sol = max_flow(&net, 0.05).unwrap();
        assert!(sol.value >= 0.95, "{}", sol.value);
        assert!(sol.max_violation <= 1e-7);
        assert!(sol.conservation_residual <= 1e-7);
    }

    #[test]
    fn disconnected_gives_zero() {
        let net = FlowNetwork::new(4, vec![(0, 1), (2, 3)], 0, 3).unwrap();
        let sol = max_flow(&net, 0.1).unwrap();
        assert_eq!(sol.value, 0.0);
        assert!(sol.flows.iter().all(|f| *f == 0.0));
    }
}
