//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::VecDeque;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use omd::game::PayoffMatrix;

/// Exact maximum flow on an undirected unit-capacity multigraph by
/// shortest augmenting paths.
pub fn edmonds_karp(nodes: usize, edges: &[(usize, usize)], source: usize, sink: usize) -> usize {
    let mut cap = vec![vec![0i64; nodes]; nodes];
    for &(u, v) in edges {
        cap[u][v] += 1;
        cap[v][u] += 1;
    }
    let mut flow = 0;
    loop {
        let mut parent = vec![usize::MAX; nodes];
        parent[source] = source;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for v in 0..nodes {
                if parent[v] == usize::MAX && cap[u][v] > 0 {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[sink] == usize::MAX {
            return flow;
        }
        let mut v = sink;
        while v != source {
            let u = parent[v];
            cap[u][v] -= 1;
            cap[v][u] += 1;
            v = u;
        }
        flow += 1;
    }
}

/// `min_f max_x fᵀAx` by linear programming.
pub fn game_value(a: &PayoffMatrix) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let v = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let f: Vec<_> = (0..a.rows())
        .map(|_| lp.add_var(0.0, (0.0, f64::INFINITY)))
        .collect();
    let simplex: Vec<_> = f.iter().map(|&var| (var, 1.0)).collect();
    lp.add_constraint(simplex.as_slice(), ComparisonOp::Eq, 1.0);
    for j in 0..a.cols() {
        let mut row: Vec<_> = f
            .iter()
            .enumerate()
            .map(|(i, &var)| (var, a.get(i, j)))
            .collect();
        row.push((v, -1.0));
        lp.add_constraint(row.as_slice(), ComparisonOp::Le, 0.0);
    }
    lp.solve()
        .expect("game LP is feasible and bounded")
        .objective()
}

/// `max cᵀf` subject to `Lf ≤ u` and `Ef = r` over free variables.
pub fn lp_max(c: &[f64], le: &[(Vec<f64>, f64)], eq: &[(Vec<f64>, f64)]) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = c
        .iter()
        .map(|&ci| lp.add_var(ci, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    let expr = |row: &Vec<f64>| -> Vec<_> { vars.iter().zip(row).map(|(&v, &a)| (v, a)).collect() };
    for (row, rhs) in le {
        lp.add_constraint(expr(row).as_slice(), ComparisonOp::Le, *rhs);
    }
    for (row, rhs) in eq {
        lp.add_constraint(expr(row).as_slice(), ComparisonOp::Eq, *rhs);
    }
    lp.solve().expect("LP is feasible and bounded").objective()
}

/// Minimizer of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol * (a.abs() + b.abs()).max(1e-300) {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}
