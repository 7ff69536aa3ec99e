//! The optimistic mirror descent round and its per-trajectory certificate.
//!
//! Each round plays `f_t = prox(g_{t-1}, M_t)` against a prediction `M_t`,
//! queries the gradient `∇_t` at `f_t`, and moves the secondary iterate
//! `g_t = prox(g_{t-1}, ∇_t)`.

use crate::error::{check_finite, check_len, invalid, Result};
use crate::linalg::{dot, sub};
use crate::mirror::map::MirrorMap;

/// Everything observed in one round; the certificate is computed from these.
#[derive(Debug, Clone, PartialEq)]
pub struct OmdRound {
    pub played: Vec<f64>,
    pub secondary: Vec<f64>,
    pub gradient: Vec<f64>,
    pub prediction: Vec<f64>,
    pub eta: f64,
}

/// State of one learner between rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct OmdState {
    primary: Vec<f64>,
    secondary: Vec<f64>,
    round: usize,
    sq_diff_history: Vec<f64>,
    r_max: f64,
    etas: Vec<f64>,
    pending: Option<(Vec<f64>, f64)>,
}

impl OmdState {
    /// Starts at `g₀ = argmin R`. `r_max` is only consulted by
    /// [`OmdState::adaptive_eta`]; the entropy map has no finite default.
    pub fn new(map: &MirrorMap, r_max: f64) -> Result<Self> {
        if !(r_max.is_finite() && r_max >= 0.0) {
            return Err(invalid(format!(
                "R_max must be finite and nonnegative, got {r_max}"
            )));
        }
        let g0 = map.center()?;
        Ok(Self {
            primary: g0.clone(),
            secondary: g0,
            round: 0,
            sq_diff_history: Vec::new(),
            r_max,
            etas: Vec::new(),
            pending: None,
        })
    }

    pub fn primary(&self) -> &[f64] {
        &self.primary
    }

    pub fn secondary(&self) -> &[f64] {
        &self.secondary
    }

    /// Number of completed rounds.
    pub fn round(&self) -> usize {
        self.round
    }

    /// `‖∇_i - M_i‖_*²` for every completed round.
    pub fn sq_diff_history(&self) -> &[f64] {
        &self.sq_diff_history
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Step size of the next round under the adaptive schedule.
    pub fn adaptive_eta(&self) -> f64 {
        adaptive_eta(&self.sq_diff_history, self.r_max)
            .expect("history entries are validated when recorded")
    }

    /// First half of a round: plays `f_t = prox(g_{t-1}, M_t)`.
    ///
    /// The gradient at `f_t` must be supplied through [`OmdState::finish_round`]
    /// before the next round starts; coupled learners use the split to compute
    /// both plays before either observes its gradient.
    pub fn begin_round(&mut self, map: &MirrorMap, prediction: &[f64], eta: f64) -> Result<&[f64]> {
        if self.pending.is_some() {
            return Err(invalid("previous round has not been finished"));
        }
        check_len(map.dim(), prediction.len())?;
        check_finite(prediction, "prediction")?;
        let played = map.prox_step(&self.secondary, prediction, eta)?;
        self.primary = played;
        self.pending = Some((prediction.to_vec(), eta));
        Ok(&self.primary)
    }

    /// Second half of a round: `g_t = prox(g_{t-1}, ∇_t)`.
    pub fn finish_round(&mut self, map: &MirrorMap, gradient: Vec<f64>) -> Result<OmdRound> {
        let (prediction, eta) = self
            .pending
            .take()
            .ok_or_else(|| invalid("no round in progress"))?;
        check_len(map.dim(), gradient.len())?;
        check_finite(&gradient, "gradient")?;
        let secondary = map.prox_step(&self.secondary, &gradient, eta)?;

        let miss = map.dual_norm(&sub(&gradient, &prediction));
        self.sq_diff_history.push(miss * miss);
        self.etas.push(eta);
        self.round += 1;
        self.secondary = secondary.clone();
        Ok(OmdRound {
            played: self.primary.clone(),
            secondary,
            gradient,
            prediction,
            eta,
        })
    }

    /// Plays one full round with prediction `prediction` and step size `eta`.
    pub fn round_with<F>(
        &mut self,
        map: &MirrorMap,
        prediction: &[f64],
        gradient_oracle: F,
        eta: f64,
    ) -> Result<OmdRound>
    where
        F: FnOnce(&[f64]) -> Vec<f64>,
    {
        let gradient = gradient_oracle(self.begin_round(map, prediction, eta)?);
        self.finish_round(map, gradient)
    }
}

/// Adaptive step size
/// `R_max · min{ (√Σ_{i≤t-1} h_i + √Σ_{i≤t-2} h_i)⁻¹, 1 }`
/// where `history` holds `h_1..h_{t-1}`. A zero denominator yields `R_max`.
pub fn adaptive_eta(history: &[f64], r_max: f64) -> Result<f64> {
    if history.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
        return Err(invalid(
            "squared differences must be finite and nonnegative",
        ));
    }
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(invalid(format!("R_max must be positive, got {r_max}")));
    }
    let total: f64 = history.iter().sum();
    let previous = total - history.last().copied().unwrap_or(0.0);
    let denom = total.sqrt() + previous.max(0.0).sqrt();
    if denom == 0.0 {
        return Ok(r_max);
    }
    Ok(r_max * (1.0 / denom).min(1.0))
}

/// Terms of the fixed-step regret bound
/// `Σ⟨f_t - f*, ∇_t⟩ ≤ D(f*, g₀)/η + Σ‖∇_t - M_t‖_*‖g_t - f_t‖
///  - (1/2η) Σ (‖g_t - f_t‖² + ‖g_{t-1} - f_t‖²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretCertificate {
    pub lhs: f64,
    pub divergence_term: f64,
    pub variance_term: f64,
    pub negative_term: f64,
}

impl RegretCertificate {
    pub fn rhs(&self) -> f64 {
        self.divergence_term + self.variance_term - self.negative_term
    }

    /// `lhs ≤ rhs` up to `1e-9` relative slack.
    pub fn holds(&self) -> bool {
        let scale = 1.0
            + self
                .lhs
                .abs()
                .max(self.divergence_term.abs())
                .max(self.variance_term);
        self.lhs <= self.rhs() + 1e-9 * scale
    }
}

/// Evaluates the certificate on a trajectory started from `g₀ = argmin R`.
pub fn regret_certificate(
    trajectory: &[OmdRound],
    map: &MirrorMap,
    eta: f64,
    comparator: &[f64],
) -> Result<RegretCertificate> {
    if trajectory.is_empty() {
        return Err(invalid("trajectory must be nonempty"));
    }
    if !(eta.is_finite() && eta > 0.0) {
        return Err(invalid(format!("step size must be positive, got {eta}")));
    }
    let g0 = map.center()?;
    let divergence_term = map.bregman(comparator, &g0)? / eta;
    let mut lhs = 0.0;
    let mut variance_term = 0.0;
    let mut negative_sum = 0.0;
    let mut previous = g0;
    for step in trajectory {
        lhs += dot(&sub(&step.played, comparator), &step.gradient);
        let gap = map.norm(&sub(&step.secondary, &step.played));
        let lag = map.norm(&sub(&previous, &step.played));
        variance_term += map.dual_norm(&sub(&step.gradient, &step.prediction)) * gap;
        negative_sum += gap * gap + lag * lag;
        previous.clone_from(&step.secondary);
    }
    Ok(RegretCertificate {
        lhs,
        divergence_term,
        variance_term,
        negative_term: negative_sum / (2.0 * eta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let map = MirrorMap::entropy(3).unwrap();
        let mut state = OmdState::new(&map, 1.0).unwrap();
        let g0 = state.secondary().to_vec();
        for _ in 0..5 {
            let r = state
                .round_with(&map, &[0.0; 3], |_| vec![0.0; 3], 0.5)
                .unwrap();
            assert_eq!(r.played, g0);
            assert_eq!(r.secondary, g0);
        }
    }

    #[test]
    fn euclidean_closed_form_round() {
        let map = MirrorMap::euclidean_ball(2, 10.0).unwrap();
        let mut state = OmdState::new(&map, 1.0).unwrap();
        let r = state
            .round_with(&map, &[0.0, 0.0], |_| vec![1.0, 0.0], 1.0)
            .unwrap();
        assert_eq!(r.played, vec![0.0, 0.0]);
        assert_eq!(r.secondary, vec![-1.0, 0.0]);
    }

    #[test]
    fn exact_prediction_gives_zero_miss() {
        let map = MirrorMap::entropy(2).unwrap();
        let mut state = OmdState::new(&map, 1.0).unwrap();
        let r = state
            .round_with(&map, &[1.0, 0.0], |_| vec![1.0, 0.0], 1.0)
            .unwrap();
        let e = (-1f64).exp();
        let expected = [e / (e + 1.0), 1.0 / (e + 1.0)];
        for (k, e) in expected.iter().enumerate() {
            assert!((r.played[k] - e).abs() < 1e-15);
            assert!((r.secondary[k] - e).abs() < 1e-15);
        }
        assert_eq!(state.sq_diff_history(), &[0.0]);
    }

    #[test]
    fn adaptive_eta_examples() {
        assert_eq!(adaptive_eta(&[], 2.0).unwrap(), 2.0);
        assert_eq!(adaptive_eta(&[4.0], 2.0).unwrap(), 1.0);
        let expected = 2.0 / (8f64.sqrt() + 2.0);
        assert!((adaptive_eta(&[4.0, 4.0], 2.0).unwrap() - expected).abs() < 1e-15);
        assert!(adaptive_eta(&[-1.0], 1.0).is_err());
    }

    #[test]
    fn zero_gradient_certificate() {
        let map = MirrorMap::entropy(4).unwrap();
        let mut state = OmdState::new(&map, 1.0).unwrap();
        let traj: Vec<_> = (0..3)
            .map(|_| {
                state
                    .round_with(&map, &[0.0; 4], |_| vec![0.0; 4], 0.25)
                    .unwrap()
            })
            .collect();
        let cert = regret_certificate(&traj, &map, 0.25, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(cert.lhs, 0.0);
        assert_eq!(cert.variance_term, 0.0);
        assert!((cert.divergence_term - 4f64.ln() / 0.25).abs() < 1e-12);
        assert!(cert.holds());
    }

    #[test]
    fn perfect_predictions_remove_variance_term() {
        let map = MirrorMap::entropy(3).unwrap();
        let mut state = OmdState::new(&map, 1.0).unwrap();
        let losses = [[0.3, -0.2, 0.9], [0.1, 0.4, -0.5], [-0.7, 0.2, 0.0]];
        let traj: Vec<_> = losses
            .iter()
            .map(|l| state.round_with(&map, l, |_| l.to_vec(), 0.5).unwrap())
            .collect();
        for v in 0..3 {
            let mut e = vec![0.0; 3];
            e[v] = 1.0;
            let cert = regret_certificate(&traj, &map, 0.5, &e).unwrap();
            assert_eq!(cert.variance_term, 0.0);
            assert!(cert.lhs <= cert.divergence_term - cert.negative_term + 1e-12);
        }
    }

    #[test]
    fn empty_trajectory_is_rejected() {
        let map = MirrorMap::entropy(2).unwrap();
        assert!(regret_certificate(&[], &map, 1.0, &[1.0, 0.0]).is_err());
    }
}
