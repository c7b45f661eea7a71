//! Rademacher and Walsh–Paley functions, Dirichlet kernels and the fast
//! Walsh–Hadamard transform.
//!
//! The Paley-ordered Hadamard matrix of level `n` is `W[i][j] = w_j(i / 2^n)`.
//! The grid point `i / 2^n` has dyadic digits equal to the bits of `i` read from
//! the most significant end (`x_0` is bit `n - 1` of `i`), so
//!
//! ```text
//! W[i][j] = (-1)^(sum_k j_k * i_{n-1-k}) = H[rev(i)][j]
//! ```
//!
//! where `H` is the naturally ordered Sylvester–Hadamard matrix and `rev` the
//! `n`-bit reversal. [`fwht`] therefore runs the usual in-place butterflies and
//! finishes with a bit-reversal permutation.

use crate::dyadic::{check_unit, DyadicPoint, Level};
use crate::{Error, Result};

/// Rademacher function `r_k(x) = (-1)^{x_k}`.
pub fn rademacher(k: u32, x: f64) -> Result<i8> {
    let p = DyadicPoint::new(x)?;
    Ok(sign(p.digit(k) as u32))
}

/// Walsh–Paley function `w_k(x) = prod_j r_j(x)^{k_j}`.
pub fn walsh(k: u64, x: f64) -> Result<i8> {
    let p = DyadicPoint::new(x)?;
    let mut parity = 0u32;
    let mut rest = k;
    while rest != 0 {
        let j = rest.trailing_zeros();
        parity ^= p.digit(j) as u32;
        rest &= rest - 1;
    }
    Ok(sign(parity))
}

#[inline]
fn sign(parity: u32) -> i8 {
    if parity & 1 == 0 {
        1
    } else {
        -1
    }
}

/// `w_j(i / 2^n)` without going through floating point.
#[inline]
pub fn walsh_at_grid(j: usize, i: usize, level: Level) -> i8 {
    sign((j & bit_reverse(i, level.get())).count_ones())
}

/// `D_{2^n}(x)`: `2^n` on `[0, 2^-n)` and zero elsewhere.
pub fn dirichlet_pow2(level: Level, x: f64) -> Result<f64> {
    check_unit("x", x)?;
    Ok(if x < level.width() { level.size() as f64 } else { 0.0 })
}

/// Reverse the lowest `bits` bits of `i`.
#[inline]
pub(crate) fn bit_reverse(i: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - bits)
    }
}

/// Multiply by the Paley-ordered Hadamard matrix in place, `O(2^n n)`.
pub fn fwht_in_place(v: &mut [f64]) -> Result<()> {
    let level = Level::from_len(v.len())?;
    let len = v.len();
    let mut half = 1;
    while half < len {
        for block in v.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*a + *b, *a - *b);
                *a = s;
                *b = d;
            }
        }
        half *= 2;
    }
    let bits = level.get();
    for i in 0..len {
        let r = bit_reverse(i, bits);
        if i < r {
            v.swap(i, r);
        }
    }
    Ok(())
}

/// `W v` for `v` of length `2^n`.
pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

/// `W^{-1} v = 2^-n W v`.
pub fn inverse_fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = fwht(v)?;
    let scale = 1.0 / out.len() as f64;
    out.iter_mut().for_each(|c| *c *= scale);
    Ok(out)
}

/// Shape of the Hadamard matrix at a given level; materializes `W` for small sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HadamardOrder {
    level: Level,
}

impl HadamardOrder {
    pub fn new(level: Level) -> Self {
        HadamardOrder { level }
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn size(&self) -> usize {
        self.level.size()
    }

    pub fn entry(&self, i: usize, j: usize) -> i8 {
        walsh_at_grid(j, i, self.level)
    }

    pub fn dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.size();
        nalgebra::DMatrix::from_fn(n, n, |i, j| self.entry(i, j) as f64)
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}
