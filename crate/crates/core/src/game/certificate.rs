//! Per-trajectory regret certificates for the mixing exponential-weights players.

use crate::linalg::{dot, norm1, norm_inf, sub};

/// One update of a mixing player, with everything its certificate needs.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// `f_t`
    pub played: Vec<f64>,
    /// `g_t`
    pub secondary: Vec<f64>,
    /// `g'_t`
    pub mixed: Vec<f64>,
    /// `g'_{t-1}`
    pub prev_mixed: Vec<f64>,
    /// `∇_t`, the loss vector charged in round `t`
    pub loss: Vec<f64>,
    /// `M_t`, the loss vector `f_t` was computed from
    pub prediction: Vec<f64>,
    /// `η_t`
    pub eta: f64,
}

/// Running regret certificate of one player.
///
/// `lhs` is the largest regret against a vertex, `Σ⟨f_t - e_i, ∇_t⟩`. Two
/// right-hand sides are tracked:
///
/// * [`GameCertificate::rhs`], which presumes nonincreasing step sizes:
///   `(η₁⁻¹ + η_t⁻¹)·R² + Σ‖∇_s - M_s‖_∞‖g_s - f_s‖₁ - ½Σ η_s⁻¹(‖g'_s - f_s‖₁² + ‖g'_{s-1} - f_s‖₁²) + 1`;
/// * [`GameCertificate::rhs_general`]: the same bound before the step sizes
///   are assumed monotone, charging `R²` for every increase of `η⁻¹` and the
///   exact mixing cost `Σ η_s⁻¹ ln(1/(1-β))`.
///
/// `R² = ln(n T²)` bounds the divergence of a vertex from any point whose
/// coordinates are at least `1/(nT²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GameCertificate {
    r2: f64,
    mixing_cost: f64,
    cum_loss: Vec<f64>,
    played_loss: f64,
    inv_eta_first: f64,
    inv_eta_last: f64,
    inv_eta_rise: f64,
    inv_eta_sum: f64,
    variance: f64,
    negative_mixed: f64,
    negative_plain: f64,
    rounds: usize,
}

impl GameCertificate {
    pub fn new(n: usize, horizon: usize, beta: f64) -> Self {
        let t = horizon as f64;
        Self {
            r2: (n as f64 * t * t).ln(),
            mixing_cost: -(-beta).ln_1p(),
            cum_loss: vec![0.0; n],
            played_loss: 0.0,
            inv_eta_first: 0.0,
            inv_eta_last: 0.0,
            inv_eta_rise: 0.0,
            inv_eta_sum: 0.0,
            variance: 0.0,
            negative_mixed: 0.0,
            negative_plain: 0.0,
            rounds: 0,
        }
    }

    pub fn push(&mut self, step: &StepRecord) {
        let inv_eta = 1.0 / step.eta;
        if self.rounds == 0 {
            self.inv_eta_first = inv_eta;
        } else {
            self.inv_eta_rise += (inv_eta - self.inv_eta_last).max(0.0);
        }
        self.inv_eta_last = inv_eta;
        self.inv_eta_sum += inv_eta;

        for (c, l) in self.cum_loss.iter_mut().zip(&step.loss) {
            *c += l;
        }
        self.played_loss += dot(&step.played, &step.loss);

        let gap = norm1(&sub(&step.secondary, &step.played));
        self.variance += norm_inf(&sub(&step.loss, &step.prediction)) * gap;
        let lag = norm1(&sub(&step.prev_mixed, &step.played));
        let mixed_gap = norm1(&sub(&step.mixed, &step.played));
        self.negative_mixed += 0.5 * inv_eta * (mixed_gap * mixed_gap + lag * lag);
        self.negative_plain += 0.5 * inv_eta * (gap * gap + lag * lag);
        self.rounds += 1;
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn radius_sq(&self) -> f64 {
        self.r2
    }

    /// Regret against vertex `i`.
    pub fn lhs_vertex(&self, i: usize) -> f64 {
        self.played_loss - self.cum_loss[i]
    }

    /// Largest regret over all vertices.
    pub fn lhs(&self) -> f64 {
        self.played_loss - crate::linalg::min(&self.cum_loss)
    }

    pub fn rhs(&self) -> f64 {
        (self.inv_eta_first + self.inv_eta_last) * self.r2 + self.variance - self.negative_mixed
            + 1.0
    }

    pub fn rhs_general(&self) -> f64 {
        (self.inv_eta_first + self.inv_eta_rise) * self.r2 + self.variance - self.negative_plain
            + self.mixing_cost * self.inv_eta_sum
    }

    /// `Σ‖∇_s - M_s‖_∞ ‖g_s - f_s‖₁`
    pub fn variance_term(&self) -> f64 {
        self.variance
    }

    pub fn holds(&self) -> bool {
        self.lhs() <= self.rhs() + slack(self.rhs())
    }

    pub fn holds_general(&self) -> bool {
        self.lhs() <= self.rhs_general() + slack(self.rhs_general())
    }
}

fn slack(scale: f64) -> f64 {
    1e-9 * scale.abs().max(1.0)
}

/// Builds the certificate of a whole recorded trajectory.
pub fn full_info_regret_certificate(
    steps: &[StepRecord],
    horizon: usize,
    beta: f64,
) -> GameCertificate {
    let n = steps.first().map_or(0, |s| s.played.len());
    let mut cert = GameCertificate::new(n, horizon, beta);
    for step in steps {
        cert.push(step);
    }
    cert
}
