//! Probability vectors kept in log-domain.
//!
//! Long runs of multiplicative updates underflow in linear scale, so every
//! update acts on log-weights and normalizes by subtracting the largest
//! log-weight before exponentiating.

use crate::error::{check_finite, invalid, Error, Result};

/// A point of the probability simplex with cached linear-scale weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    log_weights: Vec<f64>,
    weights: Vec<f64>,
}

impl SimplexPoint {
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "simplex dimension must be positive");
        let w = 1.0 / n as f64;
        Self {
            log_weights: vec![w.ln(); n],
            weights: vec![w; n],
        }
    }

    /// Normalizes arbitrary log-weights. Entries may be `-inf` (zero weight),
    /// but at least one must be finite.
    pub fn from_log_weights(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(invalid("empty simplex point"));
        }
        if raw.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(Error::NonFinite("log-weights"));
        }
        let top = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Err(invalid("all log-weights are -inf"));
        }
        let unnormalized: Vec<f64> = raw.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = unnormalized.iter().sum();
        let log_total = total.ln();
        let weights = unnormalized.iter().map(|w| w / total).collect();
        let log_weights = raw.iter().map(|l| l - top - log_total).collect();
        Ok(Self {
            log_weights,
            weights,
        })
    }

    /// Normalizes a nonnegative weight vector.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        check_finite(w, "weights")?;
        if let Some(x) = w.iter().find(|x| **x < 0.0) {
            return Err(Error::Domain(format!("negative weight {x}")));
        }
        Self::from_log_weights(w.iter().map(|x| x.ln()).collect())
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// The point `∝ w ⊙ exp(-eta · loss)`.
    ///
    /// The loss is centered at its maximum first, so adding a constant to
    /// every entry leaves the result unchanged whenever the shifted entries
    /// are exactly representable.
    pub fn exp_update(&self, loss: &[f64], eta: f64) -> Result<Self> {
        crate::error::check_len(self.dim(), loss.len())?;
        check_finite(loss, "loss")?;
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(invalid(format!(
                "step size must be finite and nonnegative, got {eta}"
            )));
        }
        let top = crate::linalg::max(loss);
        let raw = self
            .log_weights
            .iter()
            .zip(loss)
            .map(|(l, x)| l - eta * (x - top))
            .collect();
        Self::from_log_weights(raw)
    }

    /// `(1 - beta) · w + (beta / n) · 1`
    pub fn mix(&self, beta: f64) -> Self {
        if beta == 0.0 {
            return self.clone();
        }
        let n = self.dim() as f64;
        let floor = beta / n;
        let weights: Vec<f64> = self
            .weights
            .iter()
            .map(|w| (1.0 - beta) * w + floor)
            .collect();
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Self {
            log_weights,
            weights,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_sums_to_one() {
        let p = SimplexPoint::uniform(7);
        let s: f64 = p.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extreme_log_weights_do_not_underflow_to_nan() {
        let p = SimplexPoint::from_log_weights(vec![-1e5, -1e5 - 3.0, f64::NEG_INFINITY]).unwrap();
        assert!(p.weights().iter().all(|w| w.is_finite()));
        assert_eq!(p.weights()[2], 0.0);
        let s: f64 = p.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(SimplexPoint::from_log_weights(vec![]).is_err());
        assert!(SimplexPoint::from_log_weights(vec![f64::NEG_INFINITY; 2]).is_err());
        assert!(SimplexPoint::from_weights(&[0.5, -0.1]).is_err());
        assert!(SimplexPoint::uniform(2)
            .exp_update(&[f64::NAN, 0.0], 1.0)
            .is_err());
    }

    #[test]
    fn mixing_lifts_small_weights_to_floor() {
        let p = SimplexPoint::from_log_weights(vec![0.0, -800.0, -900.0]).unwrap();
        let beta = 1e-6;
        let q = p.mix(beta);
        assert!(q.min_weight() >= beta / 3.0 * (1.0 - 1e-12));
        let s: f64 = q.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}
