use rand::Rng;

use crate::error::{check_len, invalid, Error, Result};

/// Payoff matrix `A ∈ [-1, 1]^{n×m}`; the row player pays `fᵀ A x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl PayoffMatrix {
    /// Row-major entries; every entry must lie in `[-1, 1]`.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("payoff matrix needs at least one row and column"));
        }
        check_len(rows * cols, entries.len())?;
        if let Some((k, a)) = entries
            .iter()
            .enumerate()
            .find(|(_, a)| !(-1.0..=1.0).contains(*a))
        {
            return Err(Error::Domain(format!(
                "entry ({}, {}) = {a} outside [-1, 1]",
                k / cols + 1,
                k % cols + 1
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        for row in rows {
            check_len(cols, row.len())?;
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols]).expect("zero matrix is valid")
    }

    pub fn matching_pennies() -> Self {
        Self::new(2, 2, vec![1.0, -1.0, -1.0, 1.0]).expect("valid entries")
    }

    /// Entries drawn uniformly from `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let entries = (0..rows * cols)
            .map(|_| rng.gen_range(-1.0..=1.0))
            .collect();
        Self::new(rows, cols, entries).expect("sampled entries are in range")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        self.entries
            .chunks(self.cols)
            .map(|row| crate::linalg::dot(row, x))
            .collect()
    }

    /// `fᵀ A`
    pub fn vec_mul(&self, f: &[f64]) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (row, w) in self.entries.chunks(self.cols).zip(f) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += w * a;
            }
        }
        out
    }

    /// `fᵀ A x`
    pub fn value(&self, f: &[f64], x: &[f64]) -> f64 {
        crate::linalg::dot(f, &self.mul_vec(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_entry() {
        let err = PayoffMatrix::from_rows(&[vec![0.0, 2.0]]).unwrap_err();
        assert!(matches!(err, Error::Domain(msg) if msg.contains("(1, 2)")));
    }

    #[test]
    fn products_agree_with_value() {
        let a = PayoffMatrix::from_rows(&[vec![0.5, -1.0, 0.0], vec![0.25, 1.0, -0.5]]).unwrap();
        let f = [0.3, 0.7];
        let x = [0.2, 0.5, 0.3];
        let v1 = crate::linalg::dot(&f, &a.mul_vec(&x));
        let v2 = crate::linalg::dot(&a.vec_mul(&f), &x);
        assert!((v1 - v2).abs() < 1e-15);
        assert!((a.value(&f, &x) - v1).abs() < 1e-15);
    }
}
