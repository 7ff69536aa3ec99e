//! Offline optimization of smooth and Hölder-smooth convex functions.
//!
//! Optimistic mirror descent with the prediction `M_t = ∇G(g_{t-1})` is the
//! Mirror Prox method; the returned point is the average of the played
//! iterates.

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::linalg::{sub, RunningMean};
use crate::mirror::{MirrorMap, OmdRound, OmdState};

pub type GradientOracle = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type ValueOracle = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A convex `G` with `‖∇G(f) - ∇G(g)‖_* ≤ H ‖f - g‖^α` over the map's feasible set.
#[derive(Clone)]
pub struct SmoothProblem {
    pub gradient: GradientOracle,
    pub value: Option<ValueOracle>,
    /// `H`
    pub smoothness: f64,
    /// `α ∈ [0, 1]`
    pub exponent: f64,
    pub map: MirrorMap,
    /// Divergence radius `R` fed to the step-size formula.
    pub radius: f64,
}

impl std::fmt::Debug for SmoothProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothProblem")
            .field("smoothness", &self.smoothness)
            .field("exponent", &self.exponent)
            .field("map", &self.map)
            .field("radius", &self.radius)
            .finish_non_exhaustive()
    }
}

impl SmoothProblem {
    pub fn new(
        map: MirrorMap,
        gradient: GradientOracle,
        smoothness: f64,
        exponent: f64,
        radius: f64,
    ) -> Result<Self> {
        if !(smoothness.is_finite() && smoothness > 0.0) {
            return Err(invalid(format!(
                "smoothness must be positive, got {smoothness}"
            )));
        }
        if !(0.0..=1.0).contains(&exponent) {
            return Err(invalid(format!(
                "Hölder exponent must lie in [0, 1], got {exponent}"
            )));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid(format!("radius must be positive, got {radius}")));
        }
        Ok(Self {
            gradient,
            value: None,
            smoothness,
            exponent,
            map,
            radius,
        })
    }

    pub fn with_value(mut self, value: ValueOracle) -> Self {
        self.value = Some(value);
        self
    }

    /// Checks `‖∇G(f) - ∇G(g)‖_* ≤ (1 + 1e-6) H ‖f - g‖^α` on the given pairs.
    pub fn spot_check_holder(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> bool {
        pairs.iter().all(|(f, g)| {
            let lhs = self
                .map
                .dual_norm(&sub(&(self.gradient)(f), &(self.gradient)(g)));
            let dist = self.map.norm(&sub(f, g));
            lhs <= (1.0 + 1e-6) * self.smoothness * holder_power(dist, self.exponent)
        })
    }
}

/// `x^α` with `0⁰ = 1`.
fn holder_power(x: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else {
        x.powf(alpha)
    }
}

/// Result of an offline run.
#[derive(Debug, Clone)]
pub struct OfflineRun {
    /// `f̄_T = (1/T) Σ f_t`
    pub average: Vec<f64>,
    pub eta: f64,
    pub trajectory: Vec<OmdRound>,
}

/// Mirror Prox: `η = 1/H`, `M_t = ∇G(g_{t-1})`. Requires `α = 1`.
pub fn mirror_prox(problem: &SmoothProblem, rounds: usize) -> Result<OfflineRun> {
    if problem.exponent != 1.0 {
        return Err(invalid("Mirror Prox needs a smooth (α = 1) problem"));
    }
    run_predictable(problem, rounds, 1.0 / problem.smoothness)
}

/// `η = R^{1-α} H⁻¹ (1+α)^{-(1+α)/2} (1-α)^{-(1-α)/2} T^{-(1-α)/2}`, with `0⁰ = 1`.
pub fn holder_eta(radius: f64, smoothness: f64, alpha: f64, rounds: usize) -> Result<f64> {
    if !(radius.is_finite() && radius > 0.0 && smoothness.is_finite() && smoothness > 0.0) {
        return Err(invalid("radius and smoothness must be positive"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid(format!(
            "Hölder exponent must lie in [0, 1], got {alpha}"
        )));
    }
    if rounds == 0 {
        return Err(invalid("need at least one round"));
    }
    let pow = |base: f64, exp: f64| if exp == 0.0 { 1.0 } else { base.powf(exp) };
    let t = rounds as f64;
    Ok(pow(radius, 1.0 - alpha) / smoothness
        * pow(1.0 + alpha, -(1.0 + alpha) / 2.0)
        * pow(1.0 - alpha, -(1.0 - alpha) / 2.0)
        * pow(t, -(1.0 - alpha) / 2.0))
}

/// Guarantee `8 H R^{1+α} / T^{(1+α)/2}` on `G(f̄_T) - inf G`.
pub fn holder_bound(radius: f64, smoothness: f64, alpha: f64, rounds: usize) -> f64 {
    8.0 * smoothness * radius.powf(1.0 + alpha) / (rounds as f64).powf((1.0 + alpha) / 2.0)
}

/// Optimistic mirror descent with `M_t = ∇G(g_{t-1})` and the Hölder step size.
pub fn holder_optimize(problem: &SmoothProblem, rounds: usize) -> Result<OfflineRun> {
    let eta = holder_eta(problem.radius, problem.smoothness, problem.exponent, rounds)?;
    run_predictable(problem, rounds, eta)
}

fn run_predictable(problem: &SmoothProblem, rounds: usize, eta: f64) -> Result<OfflineRun> {
    if rounds == 0 {
        return Err(invalid("need at least one round"));
    }
    let map = &problem.map;
    let mut state = OmdState::new(map, 0.0)?;
    let mut mean = RunningMean::new(map.dim());
    let mut trajectory = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let prediction = (problem.gradient)(state.secondary());
        let step = state.round_with(map, &prediction, |f| (problem.gradient)(f), eta)?;
        mean.push(&step.played);
        trajectory.push(step);
    }
    Ok(OfflineRun {
        average: mean.mean(),
        eta,
        trajectory,
    })
}

/// `G(f) = Σ |f_i - p_i|^{1+α} / (1+α)`, minimized at `p` with value 0.
///
/// Its gradient is `α`-Hölder in `ℓ2` with `H = 2^{1-α} d^{(1-α)/2}`.
pub fn separable_power(
    map: MirrorMap,
    target: Vec<f64>,
    alpha: f64,
    radius: f64,
) -> Result<SmoothProblem> {
    crate::error::check_len(map.dim(), target.len())?;
    let d = target.len() as f64;
    let smoothness = 2f64.powf(1.0 - alpha) * d.powf((1.0 - alpha) / 2.0);
    let p = Arc::new(target);
    let pg = Arc::clone(&p);
    let gradient: GradientOracle = Arc::new(move |f: &[f64]| {
        f.iter()
            .zip(pg.iter())
            .map(|(x, c)| {
                let s = x - c;
                if s == 0.0 {
                    0.0
                } else {
                    s.signum() * holder_power(s.abs(), alpha)
                }
            })
            .collect()
    });
    let value: ValueOracle = Arc::new(move |f: &[f64]| {
        f.iter()
            .zip(p.iter())
            .map(|(x, c)| (x - c).abs().powf(1.0 + alpha))
            .sum::<f64>()
            / (1.0 + alpha)
    });
    Ok(SmoothProblem::new(map, gradient, smoothness, alpha, radius)?.with_value(value))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_1d(center: f64) -> SmoothProblem {
        let map = MirrorMap::euclidean_ball(1, 1.0).unwrap();
        let grad: GradientOracle = Arc::new(move |f: &[f64]| vec![f[0] - center]);
        SmoothProblem::new(map, grad, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn minimizer_at_center_is_fixed() {
        let run = mirror_prox(&quadratic_1d(0.0), 10).unwrap();
        assert!(run.trajectory.iter().all(|s| s.played == vec![0.0]));
        assert_eq!(run.average, vec![0.0]);
    }

    #[test]
    fn offset_quadratic_hand_iteration() {
        let run = mirror_prox(&quadratic_1d(0.5), 6).unwrap();
        assert_eq!(run.eta, 1.0);
        for step in &run.trajectory {
            assert_eq!(step.played, vec![0.5]);
            assert_eq!(step.secondary, vec![0.0]);
        }
    }

    #[test]
    fn mirror_prox_rejects_non_smooth() {
        let mut p = quadratic_1d(0.0);
        p.exponent = 0.5;
        assert!(mirror_prox(&p, 3).is_err());
    }

    #[test]
    fn holder_eta_endpoints() {
        assert!((holder_eta(3.0, 2.0, 1.0, 77).unwrap() - 0.25).abs() < 1e-15);
        let e0 = holder_eta(3.0, 2.0, 0.0, 16).unwrap();
        assert!((e0 - 3.0 / (2.0 * 4.0)).abs() < 1e-15);
        let mid = holder_eta(1.0, 1.0, 0.5, 1).unwrap();
        assert!((mid - 1.5f64.powf(-0.75) * 0.5f64.powf(-0.25)).abs() < 1e-15);
        assert!(holder_eta(1.0, 1.0, 1.5, 1).is_err());
    }

    #[test]
    fn single_round_average_is_first_play() {
        let map = MirrorMap::euclidean_ball(2, 1.0).unwrap();
        let problem = separable_power(map, vec![0.3, -0.4], 0.0, 0.5f64.sqrt()).unwrap();
        let run = holder_optimize(&problem, 1).unwrap();
        assert_eq!(run.average, run.trajectory[0].played);
        let value = problem.value.as_ref().unwrap();
        let bound = holder_bound(problem.radius, problem.smoothness, 0.0, 1);
        assert!(value(&run.average) <= bound);
    }

    #[test]
    fn power_family_constant_passes_spot_check() {
        let map = MirrorMap::euclidean_ball(3, 1.0).unwrap();
        let pairs = vec![
            (vec![0.1, 0.2, -0.3], vec![0.4, -0.2, 0.0]),
            (vec![0.0, 0.0, 0.0], vec![0.5, 0.5, 0.5]),
            (vec![-0.6, 0.1, 0.2], vec![0.6, 0.1, 0.25]),
        ];
        for alpha in [0.0, 0.25, 0.5, 1.0] {
            let p = separable_power(map.clone(), vec![0.1, 0.0, -0.2], alpha, 1.0).unwrap();
            assert!(p.spot_check_holder(&pairs), "alpha = {alpha}");
        }
    }
}
