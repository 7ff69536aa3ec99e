//! Euclidean projection onto affine subspaces `{f : M f = b}`.
//!
//! The correction `p = x - Mᵀλ` is found by solving `(M Mᵀ) λ = M x - b` with
//! conjugate gradients. The normal matrix is only positive semidefinite when
//! rows are linearly dependent (e.g. conservation rows of a component without
//! terminals); CG still converges on consistent systems started from zero.

use crate::error::{check_finite, check_len, invalid, Error, Result};
use crate::linalg::norm_inf;

/// Default tolerance on `‖M p - b‖_∞`.
pub const PROJECTION_TOL: f64 = 1e-8;

/// Sparse linear equality system `M f = b` over `dim` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineConstraints {
    dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
}

impl AffineConstraints {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    /// Builds the system from dense rows.
    pub fn from_dense(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        check_len(rows.len(), rhs.len())?;
        let mut eqs = Self::new(dim);
        for (row, &b) in rows.iter().zip(rhs) {
            check_len(dim, row.len())?;
            let entries = row
                .iter()
                .enumerate()
                .filter(|(_, a)| **a != 0.0)
                .map(|(j, a)| (j, *a))
                .collect();
            eqs.push_row(entries, b)?;
        }
        Ok(eqs)
    }

    /// Appends the row `Σ a_j f_j = rhs`; entries may repeat an index.
    pub fn push_row(&mut self, entries: Vec<(usize, f64)>, rhs: f64) -> Result<()> {
        if let Some((j, _)) = entries.iter().find(|(j, _)| *j >= self.dim) {
            return Err(invalid(format!(
                "column {j} out of range for dimension {}",
                self.dim
            )));
        }
        if !rhs.is_finite() || entries.iter().any(|(_, a)| !a.is_finite()) {
            return Err(Error::NonFinite("equality row"));
        }
        self.rows.push(entries);
        self.rhs.push(rhs);
        Ok(())
    }

    /// Copy of `self` with one extra row.
    pub fn with_row(&self, entries: Vec<(usize, f64)>, rhs: f64) -> Result<Self> {
        let mut out = self.clone();
        out.push_row(entries, rhs)?;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// `M x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    /// `Mᵀ λ`
    pub fn apply_transpose(&self, lambda: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (row, l) in self.rows.iter().zip(lambda) {
            for &(j, a) in row {
                out[j] += a * l;
            }
        }
        out
    }

    /// `M x - b`
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.apply(x);
        for (ri, b) in r.iter_mut().zip(&self.rhs) {
            *ri -= b;
        }
        r
    }

    /// `‖M x - b‖_∞`
    pub fn violation(&self, x: &[f64]) -> f64 {
        norm_inf(&self.residual(x))
    }
}

/// Euclidean projection of `point` onto `{f : M f = b}` with `‖M p - b‖_∞ ≤ tol`.
///
/// The iteration cap is `10 · rows`; exceeding it (typically an infeasible
/// system) yields [`Error::ProjectionFailed`] carrying the final residual.
pub fn project_affine(point: &[f64], eqs: &AffineConstraints, tol: f64) -> Result<Vec<f64>> {
    check_len(eqs.dim(), point.len())?;
    check_finite(point, "projection input")?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(invalid("projection tolerance must be positive"));
    }
    let rows = eqs.num_rows();
    if rows == 0 {
        return Ok(point.to_vec());
    }

    // r = M p - b for the current p = x - Mᵀλ
    let mut r = eqs.residual(point);
    if norm_inf(&r) <= tol {
        return Ok(point.to_vec());
    }
    let normal = |v: &[f64]| eqs.apply(&eqs.apply_transpose(v));
    let inner_tol = tol * 1e-2;
    let cap = 10 * rows.max(1);

    let mut lambda = vec![0.0; rows];
    let mut dir = r.clone();
    let mut rs: f64 = r.iter().map(|x| x * x).sum();
    let mut iterations = 0;
    while iterations < cap {
        iterations += 1;
        let q = normal(&dir);
        let curvature: f64 = dir.iter().zip(&q).map(|(a, b)| a * b).sum();
        if curvature.is_nan() || curvature <= 0.0 {
            break;
        }
        let step = rs / curvature;
        for ((l, d), (ri, qi)) in lambda.iter_mut().zip(&dir).zip(r.iter_mut().zip(&q)) {
            *l += step * d;
            *ri -= step * qi;
        }
        if norm_inf(&r) <= inner_tol {
            // recompute the true residual to shed accumulated drift
            let p = project_with(point, eqs, &lambda);
            r = eqs.residual(&p);
            if norm_inf(&r) <= tol {
                return Ok(p);
            }
            dir = r.clone();
            rs = r.iter().map(|x| x * x).sum();
            continue;
        }
        let rs_next: f64 = r.iter().map(|x| x * x).sum();
        let beta = rs_next / rs;
        for (d, ri) in dir.iter_mut().zip(&r) {
            *d = ri + beta * *d;
        }
        rs = rs_next;
    }

    let p = project_with(point, eqs, &lambda);
    let residual = eqs.violation(&p);
    if residual <= tol {
        Ok(p)
    } else {
        Err(Error::ProjectionFailed {
            iterations,
            residual,
        })
    }
}

fn project_with(point: &[f64], eqs: &AffineConstraints, lambda: &[f64]) -> Vec<f64> {
    let correction = eqs.apply_transpose(lambda);
    point.iter().zip(&correction).map(|(x, c)| x - c).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_point_is_fixed() {
        let eqs = AffineConstraints::from_dense(&[vec![1.0, 1.0]], &[1.0]).unwrap();
        let p = project_affine(&[0.25, 0.75], &eqs, PROJECTION_TOL).unwrap();
        assert_eq!(p, vec![0.25, 0.75]);
    }

    #[test]
    fn single_coordinate_constraint() {
        let eqs = AffineConstraints::from_dense(&[vec![1.0]], &[1.0]).unwrap();
        let p = project_affine(&[3.0], &eqs, PROJECTION_TOL).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_on_a_line() {
        let eqs = AffineConstraints::from_dense(&[vec![1.0, 1.0]], &[1.0]).unwrap();
        let p = project_affine(&[0.0, 0.0], &eqs, PROJECTION_TOL).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dependent_rows_still_converge() {
        // second row is twice the first
        let eqs = AffineConstraints::from_dense(
            &[vec![1.0, -1.0, 0.0], vec![2.0, -2.0, 0.0]],
            &[1.0, 2.0],
        )
        .unwrap();
        let p = project_affine(&[0.0, 0.0, 5.0], &eqs, PROJECTION_TOL).unwrap();
        assert!(eqs.violation(&p) <= PROJECTION_TOL);
        assert!((p[0] - 0.5).abs() < 1e-9 && (p[1] + 0.5).abs() < 1e-9);
        assert_eq!(p[2], 5.0);
    }

    #[test]
    fn inconsistent_system_reports_residual() {
        let eqs =
            AffineConstraints::from_dense(&[vec![1.0, 0.0], vec![1.0, 0.0]], &[0.0, 1.0]).unwrap();
        match project_affine(&[0.0, 0.0], &eqs, PROJECTION_TOL) {
            Err(Error::ProjectionFailed { residual, .. }) => assert!(residual > 0.1),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn projection_is_orthogonal() {
        let eqs = AffineConstraints::from_dense(
            &[vec![1.0, 2.0, 0.0, -1.0], vec![0.0, 1.0, 1.0, 1.0]],
            &[1.0, -2.0],
        )
        .unwrap();
        let x = [0.3, -1.2, 2.0, 0.7];
        let p = project_affine(&x, &eqs, 1e-12).unwrap();
        // x - p must lie in the row space: orthogonal to every null-space direction
        let diff: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
        let null_dir = [2.0, -1.0, 1.0, 0.0];
        assert!(eqs.apply(&null_dir).iter().all(|v| v.abs() < 1e-15));
        let ip: f64 = diff.iter().zip(&null_dir).map(|(a, b)| a * b).sum();
        assert!(ip.abs() < 1e-10);
    }
}
