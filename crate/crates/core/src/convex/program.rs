//! Approximate smooth convex programming
//! `max cᵀf  s.t. f ∈ G, G_i(f) ≤ 1` with the optimal value `F*` known.
//!
//! The variable player runs Euclidean optimistic mirror descent on the slice
//! `F = G ∩ {cᵀf = F*}`; the constraint player runs exponential weights on
//! `Δ_d` and ascends `Σ x(i) G_i(f)`. The averaged play is blended with a
//! strictly feasible point `f₀` to restore feasibility.

use std::sync::Arc;

use serde::Serialize;

use crate::convex::projection::{AffineConstraints, PROJECTION_TOL};
use crate::error::{check_finite, check_len, invalid, Error, Result};
use crate::linalg::{dot, RunningMean};
use crate::mirror::{MirrorMap, OmdState};

/// Convex constraint functions `G_1..G_d` with gradients.
pub trait Constraints: Send + Sync {
    /// Dimension of the variable.
    fn dim(&self) -> usize;
    /// Number of constraints `d`.
    fn count(&self) -> usize;
    /// `(G_1(f), …, G_d(f))`
    fn values(&self, f: &[f64]) -> Vec<f64>;
    /// `Σ_i y(i) ∇G_i(f)`
    fn weighted_gradient(&self, f: &[f64], y: &[f64]) -> Vec<f64>;
    /// Largest `‖∇G_i(f)‖₂` over `i`.
    fn max_gradient_norm(&self, f: &[f64]) -> f64;
    /// Smoothness constant `H` shared by all constraints.
    fn smoothness(&self) -> f64;
}

/// Affine constraints `G_i(f) = a_iᵀf + b_i` with sparse `a_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraints {
    dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
    offsets: Vec<f64>,
}

impl LinearConstraints {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
            offsets: Vec::new(),
        }
    }

    /// Adds `G(f) = Σ coef · f[index] + offset`.
    pub fn push(&mut self, entries: Vec<(usize, f64)>, offset: f64) -> Result<()> {
        if let Some((i, _)) = entries.iter().find(|(i, _)| *i >= self.dim) {
            return Err(invalid(format!(
                "index {i} out of range for dimension {}",
                self.dim
            )));
        }
        if entries.iter().any(|(_, c)| !c.is_finite()) || !offset.is_finite() {
            return Err(Error::NonFinite("constraint"));
        }
        self.rows.push(entries);
        self.offsets.push(offset);
        Ok(())
    }

    /// Builds from dense coefficient rows.
    pub fn from_dense(rows: &[Vec<f64>], offsets: &[f64]) -> Result<Self> {
        check_len(rows.len(), offsets.len())?;
        let dim = rows.first().map_or(0, Vec::len);
        let mut out = Self::new(dim);
        for (row, b) in rows.iter().zip(offsets) {
            check_len(dim, row.len())?;
            let sparse = row
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v));
            out.push(sparse.collect(), *b)?;
        }
        Ok(out)
    }
}

impl Constraints for LinearConstraints {
    fn dim(&self) -> usize {
        self.dim
    }

    fn count(&self) -> usize {
        self.rows.len()
    }

    fn values(&self, f: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.offsets)
            .map(|(row, b)| row.iter().map(|(i, a)| a * f[*i]).sum::<f64>() + b)
            .collect()
    }

    fn weighted_gradient(&self, _f: &[f64], y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (row, w) in self.rows.iter().zip(y) {
            for (i, a) in row {
                g[*i] += w * a;
            }
        }
        g
    }

    fn max_gradient_norm(&self, _f: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|row| row.iter().map(|(_, a)| a * a).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    fn smoothness(&self) -> f64 {
        0.0
    }
}

/// A smooth convex program with known optimal value.
#[derive(Clone)]
pub struct SmoothCP {
    objective: Vec<f64>,
    target: f64,
    constraints: Arc<dyn Constraints>,
    interior: Vec<f64>,
    gamma: f64,
    radius: f64,
    ambient: AffineConstraints,
}

impl std::fmt::Debug for SmoothCP {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothCP")
            .field("objective", &self.objective)
            .field("target", &self.target)
            .field("constraints", &self.constraints.count())
            .field("interior", &self.interior)
            .field("gamma", &self.gamma)
            .field("radius", &self.radius)
            .finish_non_exhaustive()
    }
}

impl SmoothCP {
    /// Validates `f₀ ∈ G`, `cᵀf₀ ≥ 0`, `G_i(f₀) ≤ 1 - γ` and unit gradient
    /// norms at `f₀`.
    pub fn new(
        objective: Vec<f64>,
        target: f64,
        constraints: Arc<dyn Constraints>,
        interior: Vec<f64>,
        gamma: f64,
        radius: f64,
        ambient: AffineConstraints,
    ) -> Result<Self> {
        let dim = constraints.dim();
        check_len(dim, objective.len())?;
        check_len(dim, interior.len())?;
        check_len(dim, ambient.dim())?;
        check_finite(&objective, "objective")?;
        check_finite(&interior, "interior point")?;
        if constraints.count() < 2 {
            return Err(invalid("need at least two constraints"));
        }
        if !(target.is_finite() && target >= 0.0) {
            return Err(invalid(format!(
                "target value must be finite and nonnegative, got {target}"
            )));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid(format!("margin γ must be positive, got {gamma}")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid(format!("radius B must be positive, got {radius}")));
        }
        if ambient.violation(&interior) > PROJECTION_TOL {
            return Err(Error::Domain(
                "interior point violates the ambient equalities".into(),
            ));
        }
        if dot(&objective, &interior) < 0.0 {
            return Err(Error::Domain(
                "interior point has negative objective".into(),
            ));
        }
        let worst = crate::linalg::max(&constraints.values(&interior));
        if worst > 1.0 - gamma + 1e-12 {
            return Err(Error::Domain(format!(
                "interior point has constraint value {worst} above 1 - γ = {}",
                1.0 - gamma
            )));
        }
        if constraints.max_gradient_norm(&interior) > 1.0 + 1e-12 {
            return Err(Error::Domain(
                "constraint gradients must have norm at most 1".into(),
            ));
        }
        Ok(Self {
            objective,
            target,
            constraints,
            interior,
            gamma,
            radius,
            ambient,
        })
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn constraints(&self) -> &dyn Constraints {
        self.constraints.as_ref()
    }

    pub fn interior(&self) -> &[f64] {
        &self.interior
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn ambient(&self) -> &AffineConstraints {
        &self.ambient
    }

    /// The same program with a different target value.
    pub fn with_target(&self, target: f64) -> Result<Self> {
        if !(target.is_finite() && target >= 0.0) {
            return Err(invalid(format!(
                "target value must be finite and nonnegative, got {target}"
            )));
        }
        Ok(Self {
            target,
            ..self.clone()
        })
    }

    /// Ambient equalities plus `cᵀf = F*`.
    pub fn slice(&self) -> Result<AffineConstraints> {
        let row = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0);
        self.ambient
            .with_row(row.map(|(i, c)| (i, *c)).collect(), self.target)
    }
}

/// `B²/η + η ln d / (1 - ηH)`
pub fn cp_objective(radius: f64, d: usize, smoothness: f64, eta: f64) -> f64 {
    let l = (d as f64).ln();
    radius * radius / eta + eta * l / (1.0 - eta * smoothness)
}

/// `inf_{η < 1/H} { B²/η + η ln d / (1 - ηH) } = 2B√ln d + B²H`
pub fn cp_infimum(radius: f64, d: usize, smoothness: f64) -> f64 {
    2.0 * radius * (d as f64).ln().sqrt() + radius * radius * smoothness
}

/// Minimizer `η = B / (√ln d + BH)` of [`cp_objective`] and `η' = 1/η - H`.
///
/// Substituting `s = 1/η - H` turns the objective into `B²(s + H) + ln d / s`,
/// minimized at `s = √ln d / B`.
pub fn cp_step_sizes(radius: f64, d: usize, smoothness: f64) -> Result<(f64, f64)> {
    if d < 2 {
        return Err(invalid(format!("need d >= 2 constraints, got {d}")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(invalid(format!("radius must be positive, got {radius}")));
    }
    if !(smoothness.is_finite() && smoothness >= 0.0) {
        return Err(invalid(format!(
            "smoothness must be nonnegative, got {smoothness}"
        )));
    }
    let root = (d as f64).ln().sqrt();
    let eta = radius / (root + radius * smoothness);
    Ok((eta, root / radius))
}

/// Horizon selection for [`solve_cp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounds {
    /// Smallest `T` with `T > (1/ε) inf_η {…}`.
    Auto,
    Fixed(usize),
}

/// Smallest horizon satisfying the strict round-count requirement.
pub fn auto_rounds(radius: f64, d: usize, smoothness: f64, epsilon: f64) -> usize {
    (cp_infimum(radius, d, smoothness) / epsilon).floor() as usize + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CpOptions {
    /// Stop as soon as the blended running average satisfies every
    /// constraint, instead of playing the whole horizon.
    pub stop_when_feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpReport {
    pub rounds_planned: usize,
    pub rounds_run: usize,
    pub eta: f64,
    pub eta_prime: f64,
    /// `α = ε/(ε + γ)`
    pub alpha: f64,
    /// `max_i G_i(f̂)`
    pub max_constraint: f64,
    /// `max_i G_i(f̄)`
    pub max_constraint_average: f64,
    /// `cᵀf̂`
    pub objective: f64,
    /// Largest `‖M f_t - b‖_∞` over the slice equalities and all iterates.
    pub slice_residual: f64,
    /// `max_i G_i(f̂) ≤ 1 + 1e-9`
    pub feasible: bool,
    /// `cᵀf̂ ≥ (1 - ε/γ) F* - 1e-9`
    pub objective_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpSolution {
    pub f_hat: Vec<f64>,
    pub f_bar: Vec<f64>,
    pub report: CpReport,
}

/// Constraint tolerance of the feasibility verdict.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Runs the coupled dynamics and returns `f̂ = (1 - α) f̄ + α f₀`.
pub fn solve_cp(
    problem: &SmoothCP,
    epsilon: f64,
    rounds: Rounds,
    options: CpOptions,
) -> Result<CpSolution> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(invalid(format!("ε must be positive, got {epsilon}")));
    }
    let cons = problem.constraints();
    let d = cons.count();
    let h = cons.smoothness();
    let (eta, eta_prime) = cp_step_sizes(problem.radius(), d, h)?;
    let horizon = match rounds {
        Rounds::Auto => auto_rounds(problem.radius(), d, h, epsilon),
        Rounds::Fixed(0) => return Err(invalid("need at least one round")),
        Rounds::Fixed(t) => t,
    };
    let alpha = epsilon / (epsilon + problem.gamma());

    let slice = problem.slice()?;
    let map_f = MirrorMap::euclidean_affine(slice.clone())?;
    let map_x = MirrorMap::entropy(d)?;
    let mut learner_f = OmdState::new(&map_f, 0.0)?;
    let mut learner_x = OmdState::new(&map_x, 0.0)?;
    let mut mean_f = RunningMean::new(cons.dim());
    let mut slice_residual = slice.violation(learner_f.secondary());
    let blend = |f_bar: &[f64]| -> Vec<f64> {
        f_bar
            .iter()
            .zip(problem.interior())
            .map(|(a, b)| (1.0 - alpha) * a + alpha * b)
            .collect()
    };

    for _ in 0..horizon {
        let g = learner_f.secondary().to_vec();
        let y = learner_x.secondary().to_vec();
        let pred_f = cons.weighted_gradient(&g, &y);
        let pred_x: Vec<f64> = cons.values(&g).iter().map(|v| -v).collect();

        let f_t = learner_f.begin_round(&map_f, &pred_f, eta)?.to_vec();
        let x_t = learner_x.begin_round(&map_x, &pred_x, eta_prime)?.to_vec();
        let grad_f = cons.weighted_gradient(&f_t, &x_t);
        let grad_x = cons.values(&f_t).iter().map(|v| -v).collect();
        let step = learner_f.finish_round(&map_f, grad_f)?;
        learner_x.finish_round(&map_x, grad_x)?;

        slice_residual = slice_residual.max(slice.violation(&step.played));
        mean_f.push(&step.played);
        if options.stop_when_feasible {
            let candidate = blend(&mean_f.mean());
            if crate::linalg::max(&cons.values(&candidate)) <= 1.0 + FEASIBILITY_TOL {
                break;
            }
        }
    }

    let f_bar = mean_f.mean();
    let f_hat = blend(&f_bar);
    let max_constraint = crate::linalg::max(&cons.values(&f_hat));
    let objective = dot(problem.objective(), &f_hat);
    let report = CpReport {
        rounds_planned: horizon,
        rounds_run: mean_f.count(),
        eta,
        eta_prime,
        alpha,
        max_constraint,
        max_constraint_average: crate::linalg::max(&cons.values(&f_bar)),
        objective,
        slice_residual,
        feasible: max_constraint <= 1.0 + FEASIBILITY_TOL,
        objective_ok: objective >= (1.0 - epsilon / problem.gamma()) * problem.target() - 1e-9,
    };
    Ok(CpSolution {
        f_hat,
        f_bar,
        report,
    })
}

/// Largest `‖∇G_i‖₂` on sampled points, for checking the unit-Lipschitz hypothesis.
pub fn max_gradient_norm_on(cons: &dyn Constraints, points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|p| cons.max_gradient_norm(p))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_problem(target: f64) -> SmoothCP {
        // maximize f s.t. f ≤ 1, -f ≤ 1 in one dimension
        let cons = LinearConstraints::from_dense(&[vec![1.0], vec![-1.0]], &[0.0, 0.0]).unwrap();
        SmoothCP::new(
            vec![1.0],
            target,
            Arc::new(cons),
            vec![0.0],
            1.0,
            2.0,
            AffineConstraints::new(1),
        )
        .unwrap()
    }

    #[test]
    fn step_size_examples() {
        let (eta, eta_p) = cp_step_sizes(2.0, 3, 0.0).unwrap();
        let l = 3f64.ln();
        assert!((eta - 2.0 / l.sqrt()).abs() < 1e-15);
        assert!((eta_p - l.sqrt() / 2.0).abs() < 1e-15);
        assert!((cp_objective(2.0, 3, 0.0, eta) - cp_infimum(2.0, 3, 0.0)).abs() < 1e-12);
        assert!(cp_step_sizes(1.0, 1, 0.0).is_err());
        assert!(cp_step_sizes(0.0, 4, 0.0).is_err());
    }

    #[test]
    fn smooth_case_relation() {
        let (eta, eta_p) = cp_step_sizes(1.5, 7, 0.8).unwrap();
        assert!(eta < 1.0 / 0.8);
        assert!((eta_p - (1.0 / eta - 0.8)).abs() < 1e-12);
        let best = cp_objective(1.5, 7, 0.8, eta);
        for scale in [0.9, 0.99, 1.01, 1.1] {
            let other = eta * scale;
            if other < 1.0 / 0.8 {
                assert!(cp_objective(1.5, 7, 0.8, other) >= best);
            }
        }
    }

    #[test]
    fn box_instance_meets_guarantees() {
        for eps in [0.1, 0.01] {
            let sol = solve_cp(&box_problem(0.5), eps, Rounds::Auto, CpOptions::default()).unwrap();
            assert!(sol.report.feasible, "{:?}", sol.report);
            assert!(sol.report.objective_ok, "{:?}", sol.report);
            assert!((sol.f_bar[0] - 0.5).abs() < 1e-8);
        }
    }

    #[test]
    fn vacuous_constraints() {
        let cons =
            LinearConstraints::from_dense(&[vec![0.0, 0.0], vec![0.0, 0.0]], &[0.0, 0.0]).unwrap();
        let p = SmoothCP::new(
            vec![1.0, 1.0],
            2.0,
            Arc::new(cons),
            vec![0.0, 0.0],
            1.0,
            3.0,
            AffineConstraints::new(2),
        )
        .unwrap();
        let sol = solve_cp(&p, 0.1, Rounds::Fixed(20), CpOptions::default()).unwrap();
        let alpha = 0.1 / 1.1;
        assert!((sol.report.objective - (1.0 - alpha) * 2.0).abs() < 1e-9);
        assert!(sol.report.feasible);
    }

    #[test]
    fn rejects_bad_interior_point() {
        let cons = LinearConstraints::from_dense(&[vec![1.0], vec![-1.0]], &[0.0, 0.0]).unwrap();
        let res = SmoothCP::new(
            vec![1.0],
            0.5,
            Arc::new(cons),
            vec![0.5],
            1.0,
            2.0,
            AffineConstraints::new(1),
        );
        assert!(res.is_err());
    }
}
