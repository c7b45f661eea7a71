//! Dyadic circulant matrices `A[i][j] = a_{i ⊕ j}`.
//!
//! Every dyadic circulant is diagonalized by the Paley Hadamard matrix,
//! `A = W D_a W^{-1}` with `D_a = diag(a(i / 2^n))` and `a = sum a_j w_j`, so a
//! product with `A` is three diagonal-cost steps in the Walsh domain.

use nalgebra::DMatrix;

use crate::dyadic::{nat_xor, Level};
use crate::projection::WalshPolynomial;
use crate::walsh::{check_len, fwht, fwht_in_place, inverse_fwht};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicCirculant {
    level: Level,
    generator: Vec<f64>,
    eigenvalues: Vec<f64>,
}

impl DyadicCirculant {
    /// Circulant generated by the coefficients `a_0..a_{2^n-1}`.
    pub fn new(generator: Vec<f64>) -> Result<Self> {
        let level = Level::from_len(generator.len())?;
        let eigenvalues = fwht(&generator)?;
        Ok(DyadicCirculant { level, generator, eigenvalues })
    }

    pub fn from_polynomial(poly: &WalshPolynomial) -> Self {
        Self::new(poly.coeffs().to_vec()).expect("polynomial length is a power of two")
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn generator(&self) -> &[f64] {
        &self.generator
    }

    /// `a(i / 2^n)` for each grid point.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `A v` through the Walsh domain, `O(2^n n)`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.generator.len(), v.len())?;
        let mut w = inverse_fwht(v)?;
        w.iter_mut().zip(&self.eigenvalues).for_each(|(c, d)| *c *= d);
        fwht_in_place(&mut w)?;
        Ok(w)
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.generator.len();
        DMatrix::from_fn(n, n, |i, j| self.generator[nat_xor(i, j)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_generator_is_scaled_identity() {
        let mut g = vec![0.0; 8];
        g[0] = 2.5;
        let a = DyadicCirculant::new(g).unwrap();
        assert_eq!(a.dense(), DMatrix::identity(8, 8) * 2.5);
        assert!(a.eigenvalues().iter().all(|&e| e == 2.5));
        let v = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let out = a.apply(&v).unwrap();
        for (o, x) in out.iter().zip(&v) {
            assert!((o - 2.5 * x).abs() < 1e-13);
        }
    }

    #[test]
    fn two_by_two() {
        let a = DyadicCirculant::new(vec![3.0, -1.5]).unwrap();
        assert_eq!(a.dense(), DMatrix::from_row_slice(2, 2, &[3.0, -1.5, -1.5, 3.0]));
        assert_eq!(a.eigenvalues(), &[1.5, 4.5]);
    }

    #[test]
    fn dense_structure() {
        let g = vec![1.0, 2.0, 3.0, 4.0];
        let a = DyadicCirculant::new(g.clone()).unwrap().dense();
        assert_eq!(a, a.transpose());
        for i in 0..4 {
            assert_eq!(a.row(i).sum(), 10.0);
        }
        assert_eq!(a[(1, 2)], g[3]);
        assert_eq!(a[(3, 1)], g[2]);
    }

    #[test]
    fn apply_first_column_and_identity() {
        let g = vec![0.5, -1.0, 2.0, 0.25];
        let a = DyadicCirculant::new(g.clone()).unwrap();
        let col = a.apply(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        for (c, x) in col.iter().zip(&g) {
            assert!((c - x).abs() < 1e-15);
        }
        let id = DyadicCirculant::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(id.apply(&g).unwrap(), g);
        assert!(a.apply(&[1.0, 2.0]).is_err());
        assert!(DyadicCirculant::new(vec![1.0; 3]).is_err());
    }
}
