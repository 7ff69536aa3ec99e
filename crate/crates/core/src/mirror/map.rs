//! Regularizers, their Bregman divergences and prox steps.
//!
//! Norm pairing per regularizer: negative entropy uses `ℓ1` with dual `ℓ∞`;
//! the Euclidean regularizer uses `ℓ2` for both.

use crate::convex::projection::{project_affine, AffineConstraints, PROJECTION_TOL};
use crate::error::{check_finite, check_len, invalid, Error, Result};
use crate::linalg::{norm1, norm2, norm_inf};
use crate::mirror::simplex::SimplexPoint;

/// Tolerance on `Σ f_i = 1` when validating simplex points.
const SIMPLEX_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    /// `R(f) = Σ f_i ln f_i`, 1-strongly convex w.r.t. `ℓ1` on the simplex.
    NegativeEntropy,
    /// `R(f) = ½‖f‖²`
    Euclidean,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    Simplex,
    /// Centered at the origin.
    Ball {
        radius: f64,
    },
    Affine(AffineConstraints),
}

/// A regularizer paired with the feasible set it is minimized over.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorMap {
    regularizer: Regularizer,
    dim: usize,
    set: FeasibleSet,
}

impl MirrorMap {
    pub fn new(regularizer: Regularizer, dim: usize, set: FeasibleSet) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        match (&regularizer, &set) {
            (Regularizer::NegativeEntropy, FeasibleSet::Simplex) => {}
            (Regularizer::NegativeEntropy, _) => {
                return Err(invalid("negative entropy is only defined on the simplex"))
            }
            (_, FeasibleSet::Ball { radius }) if !(radius.is_finite() && *radius > 0.0) => {
                return Err(invalid(format!(
                    "ball radius must be positive, got {radius}"
                )))
            }
            (_, FeasibleSet::Affine(eqs)) => check_len(dim, eqs.dim())?,
            _ => {}
        }
        Ok(Self {
            regularizer,
            dim,
            set,
        })
    }

    pub fn entropy(dim: usize) -> Result<Self> {
        Self::new(Regularizer::NegativeEntropy, dim, FeasibleSet::Simplex)
    }

    pub fn euclidean_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::new(Regularizer::Euclidean, dim, FeasibleSet::Ball { radius })
    }

    pub fn euclidean_simplex(dim: usize) -> Result<Self> {
        Self::new(Regularizer::Euclidean, dim, FeasibleSet::Simplex)
    }

    pub fn euclidean_affine(eqs: AffineConstraints) -> Result<Self> {
        Self::new(Regularizer::Euclidean, eqs.dim(), FeasibleSet::Affine(eqs))
    }

    pub fn regularizer(&self) -> Regularizer {
        self.regularizer
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    /// Primal norm `‖·‖`.
    pub fn norm(&self, v: &[f64]) -> f64 {
        match self.regularizer {
            Regularizer::NegativeEntropy => norm1(v),
            Regularizer::Euclidean => norm2(v),
        }
    }

    /// Dual norm `‖·‖_*`.
    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        match self.regularizer {
            Regularizer::NegativeEntropy => norm_inf(v),
            Regularizer::Euclidean => norm2(v),
        }
    }

    /// `g₀ = argmin R` over the feasible set.
    pub fn center(&self) -> Result<Vec<f64>> {
        match &self.set {
            FeasibleSet::Simplex => Ok(vec![1.0 / self.dim as f64; self.dim]),
            FeasibleSet::Ball { .. } => Ok(vec![0.0; self.dim]),
            FeasibleSet::Affine(eqs) => project_affine(&vec![0.0; self.dim], eqs, PROJECTION_TOL),
        }
    }

    /// Euclidean projection onto the feasible set.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, v.len())?;
        match &self.set {
            FeasibleSet::Simplex => Ok(project_simplex(v)),
            FeasibleSet::Ball { radius } => Ok(project_ball(v, *radius)),
            FeasibleSet::Affine(eqs) => project_affine(v, eqs, PROJECTION_TOL),
        }
    }

    /// `D_R(f, g) = R(f) - R(g) - ⟨∇R(g), f - g⟩`.
    pub fn bregman(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        check_len(self.dim, f.len())?;
        check_len(self.dim, g.len())?;
        check_finite(f, "bregman argument")?;
        check_finite(g, "bregman argument")?;
        match self.regularizer {
            Regularizer::Euclidean => {
                Ok(0.5 * f.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            }
            Regularizer::NegativeEntropy => {
                check_simplex(f)?;
                check_simplex(g)?;
                if let Some(x) = g.iter().find(|x| **x <= 0.0) {
                    return Err(Error::Domain(format!(
                        "entropy divergence needs a strictly positive base, found {x}"
                    )));
                }
                let kl: f64 = f
                    .iter()
                    .zip(g)
                    .filter(|(a, _)| **a > 0.0)
                    .map(|(a, b)| a * (a.ln() - b.ln()))
                    .sum();
                Ok(kl.max(0.0))
            }
        }
    }

    /// `argmin_a η⟨a, loss⟩ + D_R(a, base)` over the feasible set.
    pub fn prox_step(&self, base: &[f64], loss: &[f64], eta: f64) -> Result<Vec<f64>> {
        check_len(self.dim, base.len())?;
        check_len(self.dim, loss.len())?;
        check_finite(loss, "loss")?;
        check_finite(base, "prox base")?;
        if !(eta.is_finite() && eta > 0.0) {
            return Err(invalid(format!("step size must be positive, got {eta}")));
        }
        match self.regularizer {
            Regularizer::NegativeEntropy => {
                check_simplex(base)?;
                let point = SimplexPoint::from_weights(base)?;
                Ok(point.exp_update(loss, eta)?.into_weights())
            }
            Regularizer::Euclidean => {
                let moved: Vec<f64> = base.iter().zip(loss).map(|(b, l)| b - eta * l).collect();
                self.project(&moved)
            }
        }
    }
}

fn check_simplex(f: &[f64]) -> Result<()> {
    if let Some(x) = f.iter().find(|x| **x < 0.0) {
        return Err(Error::Domain(format!("negative coordinate {x}")));
    }
    let total: f64 = f.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_SUM_TOL {
        return Err(Error::Domain(format!("coordinates sum to {total}, not 1")));
    }
    Ok(())
}

/// Exact Euclidean projection onto the probability simplex (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (k, u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            threshold = candidate;
        }
    }
    v.iter().map(|x| (x - threshold).max(0.0)).collect()
}

/// Euclidean projection onto the origin-centered ball of the given radius.
pub fn project_ball(v: &[f64], radius: f64) -> Vec<f64> {
    let n = norm2(v);
    if n <= radius {
        v.to_vec()
    } else {
        v.iter().map(|x| x * radius / n).collect()
    }
}
