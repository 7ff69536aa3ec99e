//! Structured min-max optimization by two coupled optimistic learners.
//!
//! Player I minimizes `φ(·, x)` over its set; Player II maximizes `φ(f, ·)` and
//! is run as a minimizer of `-φ`. Both predict their next gradient by the
//! gradient at the pair of secondary iterates `(g_{t-1}, y_{t-1})`.

use std::sync::Arc;

use crate::error::{check_len, invalid, Result};
use crate::game::PayoffMatrix;
use crate::linalg::{max, min, sub, RunningMean};
use crate::mirror::{MirrorMap, OmdRound, OmdState};

pub type PairField = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type PairValue = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// A convex-concave `φ(f, x)` with Hölder-smooth partial gradients.
#[derive(Clone)]
pub struct SaddleProblem {
    pub grad_f: PairField,
    pub grad_x: PairField,
    pub value: PairValue,
    pub map_f: MirrorMap,
    pub map_x: MirrorMap,
    /// `H₁, H₂, H₃, H₄`
    pub smoothness: [f64; 4],
    /// `α, α', β, β'`
    pub exponents: [f64; 4],
    /// `R₁`, `R₂` with `D(f*, g₀) ≤ R₁²`, `D(x*, y₀) ≤ R₂²`.
    pub radius_f: f64,
    pub radius_x: f64,
    /// Exact duality gap of a pair, when computable.
    pub gap_oracle: Option<PairValue>,
}

impl std::fmt::Debug for SaddleProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SaddleProblem")
            .field("map_f", &self.map_f)
            .field("map_x", &self.map_x)
            .field("smoothness", &self.smoothness)
            .field("exponents", &self.exponents)
            .field("radius_f", &self.radius_f)
            .field("radius_x", &self.radius_x)
            .finish_non_exhaustive()
    }
}

impl SaddleProblem {
    /// `γ = min{α, α', β, β'}`
    pub fn gamma(&self) -> f64 {
        self.exponents.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `H = max{H₁..H₄}`
    pub fn smoothness_max(&self) -> f64 {
        self.smoothness.iter().copied().fold(0.0, f64::max)
    }

    /// `φ(f, x) = fᵀ A x` over two simplices with entropy maps.
    ///
    /// Bounded entries give `‖A(x - y)‖_∞ ≤ ‖x - y‖₁`, so `H = 1`, `γ = 1`, and
    /// `R₁² = ln n`, `R₂² = ln m` bound the divergence from the uniform start.
    pub fn bilinear(a: &PayoffMatrix) -> Self {
        let (n, m) = (a.rows(), a.cols());
        let (a1, a2, a3, a4) = (
            Arc::new(a.clone()),
            Arc::new(a.clone()),
            Arc::new(a.clone()),
            Arc::new(a.clone()),
        );
        Self {
            grad_f: Arc::new(move |_f: &[f64], x: &[f64]| a1.mul_vec(x)),
            grad_x: Arc::new(move |f: &[f64], _x: &[f64]| a2.vec_mul(f)),
            value: Arc::new(move |f: &[f64], x: &[f64]| a3.value(f, x)),
            map_f: MirrorMap::entropy(n).expect("positive dimension"),
            map_x: MirrorMap::entropy(m).expect("positive dimension"),
            smoothness: [1.0; 4],
            exponents: [1.0; 4],
            radius_f: (n as f64).ln().sqrt(),
            radius_x: (m as f64).ln().sqrt(),
            gap_oracle: Some(Arc::new(move |f: &[f64], x: &[f64]| {
                bilinear_gap(&a4, f, x).expect("dimensions fixed by construction")
            })),
        }
    }
}

/// `η = η' = (R₁² + R₂²)^{(1-γ)/2} (2H)⁻¹ (T/2)^{(γ-1)/2}`
pub fn saddle_eta(
    radius_f: f64,
    radius_x: f64,
    smoothness: f64,
    gamma: f64,
    rounds: usize,
) -> Result<f64> {
    if !(radius_f > 0.0 && radius_x > 0.0 && radius_f.is_finite() && radius_x.is_finite()) {
        return Err(invalid("radii must be positive"));
    }
    if !(smoothness.is_finite() && smoothness > 0.0) {
        return Err(invalid(format!(
            "smoothness must be positive, got {smoothness}"
        )));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(invalid(format!("γ must lie in [0, 1], got {gamma}")));
    }
    if rounds == 0 {
        return Err(invalid("need at least one round"));
    }
    let r2 = radius_f * radius_f + radius_x * radius_x;
    let exp = (1.0 - gamma) / 2.0;
    Ok(r2.powf(exp) / (2.0 * smoothness) * (rounds as f64 / 2.0).powf(-exp))
}

/// Guarantee `4H (R₁² + R₂²)^{(1+γ)/2} / T^{(1+γ)/2}` on the gap of the averages.
pub fn saddle_bound(
    radius_f: f64,
    radius_x: f64,
    smoothness: f64,
    gamma: f64,
    rounds: usize,
) -> f64 {
    let r2 = radius_f * radius_f + radius_x * radius_x;
    4.0 * smoothness * r2.powf((1.0 + gamma) / 2.0) / (rounds as f64).powf((1.0 + gamma) / 2.0)
}

/// `max_j (fᵀA)_j - min_i (Ax)_i`, the duality gap of `(f, x)` for `φ = fᵀAx`.
pub fn bilinear_gap(a: &PayoffMatrix, f: &[f64], x: &[f64]) -> Result<f64> {
    check_len(a.rows(), f.len())?;
    check_len(a.cols(), x.len())?;
    Ok(max(&a.vec_mul(f)) - min(&a.mul_vec(x)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapReport {
    /// From the problem's gap oracle.
    Exact(f64),
    /// Sum of both players' regret-bound right-hand sides divided by `T`.
    RegretBound(f64),
}

impl GapReport {
    pub fn value(&self) -> f64 {
        match *self {
            GapReport::Exact(v) | GapReport::RegretBound(v) => v,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SaddleRound {
    pub t: usize,
    pub f: OmdRound,
    pub x: OmdRound,
    /// Gap of the running averages, when an oracle exists.
    pub running_gap: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SaddleResult {
    pub f_bar: Vec<f64>,
    pub x_bar: Vec<f64>,
    pub eta_f: f64,
    pub eta_x: f64,
    pub gap: GapReport,
    pub trace: Vec<SaddleRound>,
}

/// Runs both learners for `rounds` rounds with the Hölder-saddle step size.
pub fn saddle_solve(problem: &SaddleProblem, rounds: usize) -> Result<SaddleResult> {
    let eta = saddle_eta(
        problem.radius_f,
        problem.radius_x,
        problem.smoothness_max(),
        problem.gamma(),
        rounds,
    )?;
    solve_coupled(problem, rounds, eta, eta)
}

/// Coupled dynamics with separate step sizes for the two learners.
pub fn solve_coupled(
    problem: &SaddleProblem,
    rounds: usize,
    eta_f: f64,
    eta_x: f64,
) -> Result<SaddleResult> {
    if rounds == 0 {
        return Err(invalid("need at least one round"));
    }
    let (map_f, map_x) = (&problem.map_f, &problem.map_x);
    let mut learner_f = OmdState::new(map_f, 0.0)?;
    let mut learner_x = OmdState::new(map_x, 0.0)?;
    let mut mean_f = RunningMean::new(map_f.dim());
    let mut mean_x = RunningMean::new(map_x.dim());
    let mut trace = Vec::with_capacity(rounds);

    for t in 1..=rounds {
        let (g, y) = (
            learner_f.secondary().to_vec(),
            learner_x.secondary().to_vec(),
        );
        let pred_f = (problem.grad_f)(&g, &y);
        let pred_x: Vec<f64> = (problem.grad_x)(&g, &y).iter().map(|v| -v).collect();

        // both plays are fixed before either learner sees its gradient
        let f_t = learner_f.begin_round(map_f, &pred_f, eta_f)?.to_vec();
        let x_t = learner_x.begin_round(map_x, &pred_x, eta_x)?.to_vec();
        let grad_f = (problem.grad_f)(&f_t, &x_t);
        let grad_x = (problem.grad_x)(&f_t, &x_t).iter().map(|v| -v).collect();
        let step_f = learner_f.finish_round(map_f, grad_f)?;
        let step_x = learner_x.finish_round(map_x, grad_x)?;

        mean_f.push(&step_f.played);
        mean_x.push(&step_x.played);
        let running_gap = problem
            .gap_oracle
            .as_ref()
            .map(|gap| gap(&mean_f.mean(), &mean_x.mean()));
        trace.push(SaddleRound {
            t,
            f: step_f,
            x: step_x,
            running_gap,
        });
    }

    let (f_bar, x_bar) = (mean_f.mean(), mean_x.mean());
    let gap = match &problem.gap_oracle {
        Some(gap) => GapReport::Exact(gap(&f_bar, &x_bar)),
        None => GapReport::RegretBound(regret_bound_sum(problem, &trace, eta_f, eta_x)?),
    };
    Ok(SaddleResult {
        f_bar,
        x_bar,
        eta_f,
        eta_x,
        gap,
        trace,
    })
}

/// `(RHS₁ + RHS₂) / t` for every prefix `t` of the trace, where each RHS is
/// the fixed-step regret bound with `R²` in place of the comparator
/// divergence. For bilinear `φ` it upper-bounds the gap of the averages.
pub fn regret_bound_prefixes(
    problem: &SaddleProblem,
    trace: &[SaddleRound],
    eta_f: f64,
    eta_x: f64,
) -> Result<Vec<f64>> {
    let side =
        |map: &MirrorMap, radius: f64, eta: f64, pick: &dyn Fn(&SaddleRound) -> &OmdRound| {
            let mut previous = map.center()?;
            let mut total = radius * radius / eta;
            let mut out = Vec::with_capacity(trace.len());
            for round in trace {
                let step = pick(round);
                let gap = map.norm(&sub(&step.secondary, &step.played));
                let lag = map.norm(&sub(&previous, &step.played));
                total += map.dual_norm(&sub(&step.gradient, &step.prediction)) * gap;
                total -= (gap * gap + lag * lag) / (2.0 * eta);
                previous.clone_from(&step.secondary);
                out.push(total);
            }
            Ok::<Vec<f64>, crate::error::Error>(out)
        };
    let rhs_f = side(&problem.map_f, problem.radius_f, eta_f, &|r| &r.f)?;
    let rhs_x = side(&problem.map_x, problem.radius_x, eta_x, &|r| &r.x)?;
    Ok(rhs_f
        .iter()
        .zip(&rhs_x)
        .enumerate()
        .map(|(k, (a, b))| (a + b) / (k + 1) as f64)
        .collect())
}

fn regret_bound_sum(
    problem: &SaddleProblem,
    trace: &[SaddleRound],
    eta_f: f64,
    eta_x: f64,
) -> Result<f64> {
    Ok(*regret_bound_prefixes(problem, trace, eta_f, eta_x)?
        .last()
        .expect("at least one round"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saddle_eta_examples() {
        assert!((saddle_eta(0.3, 2.0, 1.5, 1.0, 999).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let r = 0.5f64.sqrt();
        for t in [2usize, 8, 100] {
            let eta = saddle_eta(r, r, 0.5, 0.0, t).unwrap();
            assert!((eta - (t as f64 / 2.0).powf(-0.5)).abs() < 1e-14);
        }
        assert!(saddle_eta(0.0, 0.0, 1.0, 1.0, 10).is_err());
    }

    #[test]
    fn bilinear_gap_examples() {
        let pennies = PayoffMatrix::matching_pennies();
        assert_eq!(
            bilinear_gap(&pennies, &[0.5, 0.5], &[0.5, 0.5]).unwrap(),
            0.0
        );
        let corner = PayoffMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(
            bilinear_gap(&corner, &[1.0, 0.0], &[1.0, 0.0]).unwrap(),
            1.0
        );
        let id = PayoffMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(bilinear_gap(&id, &[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert!(bilinear_gap(&id, &[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn zero_matrix_has_zero_gap_every_round() {
        let problem = SaddleProblem::bilinear(&PayoffMatrix::zeros(3, 2));
        let res = saddle_solve(&problem, 20).unwrap();
        assert!(res.trace.iter().all(|r| r.running_gap == Some(0.0)));
        assert_eq!(res.gap, GapReport::Exact(0.0));
    }

    #[test]
    fn general_problem_reports_regret_bound() {
        let mut problem = SaddleProblem::bilinear(&PayoffMatrix::matching_pennies());
        problem.gap_oracle = None;
        let res = saddle_solve(&problem, 50).unwrap();
        match res.gap {
            GapReport::RegretBound(b) => {
                let exact = bilinear_gap(&PayoffMatrix::matching_pennies(), &res.f_bar, &res.x_bar)
                    .unwrap();
                assert!(exact <= b + 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
