use std::f64::consts::TAU;

use crate::error::{invalid, Result};

pub fn rastrigin(x: &[f64]) -> Result<f64> {
    if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
        return invalid(format!("non-finite coordinate at index {pos}"));
    }
    Ok(rastrigin_unchecked(x))
}

#[inline]
pub(crate) fn rastrigin_unchecked(x: &[f64]) -> f64 {
    x.iter().map(|&xi| xi * xi - 10.0 * (TAU * xi).cos() + 10.0).sum()
}

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        SquareMatrix { n, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return invalid("matrix rows must all have length equal to the row count");
        }
        Ok(SquareMatrix { n, data: rows.concat() })
    }

    pub(crate) fn from_flat(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        SquareMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// `max |M * M^T - I|` over all entries.
    pub fn orthogonality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                let dot: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Writes `x * M` (row vector times matrix) into `out`.
    #[inline]
    pub(crate) fn left_multiply_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            for (o, &mij) in out.iter_mut().zip(self.row(i)) {
                *o += xi * mij;
            }
        }
    }
}

pub fn rotated_rastrigin(x: &[f64], rotation: &SquareMatrix) -> Result<f64> {
    if x.len() != rotation.dim() {
        return invalid(format!(
            "vector of length {} does not match {0}x{0} rotation",
            rotation.dim()
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return invalid("non-finite coordinate");
    }
    let mut z = vec![0.0; x.len()];
    rotation.left_multiply_into(x, &mut z);
    Ok(rastrigin_unchecked(&z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(rastrigin(&[0.0; 17]).unwrap(), 0.0);
        let ones = vec![1.0; 1000];
        assert!((rastrigin(&ones).unwrap() - 1000.0).abs() < 1e-9);
        assert!((rastrigin(&[0.5]).unwrap() - 20.25).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(rastrigin(&[0.0, f64::NAN]).is_err());
        assert!(rastrigin(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn dense_grid_minimum_only_at_origin() {
        let steps = 20_480;
        for k in 0..=steps {
            let x = -5.12 + 10.24 * k as f64 / steps as f64;
            let f = rastrigin(&[x]).unwrap();
            assert!(f >= 0.0);
            if x.abs() > 1e-9 {
                assert!(f > 0.0, "f({x}) = {f}");
            }
        }
        assert_eq!(rastrigin(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn rotated_matches_plain_under_identity() {
        let x = [0.3, -1.7, 2.2];
        let a = rotated_rastrigin(&x, &SquareMatrix::identity(3)).unwrap();
        assert_eq!(a, rastrigin(&x).unwrap());
    }

    #[test]
    fn quarter_turn_moves_coordinate() {
        let m = SquareMatrix::from_rows(vec![vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let v = rotated_rastrigin(&[0.5, 0.0], &m).unwrap();
        assert!((v - 20.25).abs() < 1e-12);
        assert_eq!(rotated_rastrigin(&[0.0, 0.0], &m).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(rotated_rastrigin(&[1.0, 2.0, 3.0], &SquareMatrix::identity(2)).is_err());
        assert!(SquareMatrix::from_rows(vec![vec![1.0], vec![0.0, 1.0]]).is_err());
    }
}
