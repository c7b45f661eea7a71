//! Dyadic arithmetic on `[0, 1)` and on the naturals.
//!
//! Points of `[0, 1)` are handled through their binary expansion
//! `x = sum x_k 2^-(k+1)`. Dyadic rationals always use the expansion that
//! terminates in zeros, so `1/2 = 0.1000...` and never `0.0111...`.

use crate::{Error, Result};

/// Bits of expansion kept for points of `[0, 1)`. With 64 digits every `f64` in
/// `[2^-11, 1)` is represented exactly.
pub const DEFAULT_PRECISION: u32 = 64;

/// Resolution of the dyadic grid: everything at level `n` lives on `2^n` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Level(u32);

impl Level {
    /// Largest supported level. Dense operators are only practical far below this.
    pub const MAX: u32 = 30;

    pub fn new(n: u32) -> Result<Self> {
        if n > Self::MAX {
            return Err(Error::InvalidLevel(n));
        }
        Ok(Level(n))
    }

    /// Level whose grid has `len` cells.
    pub fn from_len(len: usize) -> Result<Self> {
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        Level::new(len.trailing_zeros())
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Number of cells, `2^n`.
    pub fn size(self) -> usize {
        1usize << self.0
    }

    /// Cell width `2^-n`.
    pub fn width(self) -> f64 {
        (-(self.0 as f64)).exp2()
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub(crate) fn check_unit(what: &'static str, x: f64) -> Result<()> {
    if (0.0..1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain { what, value: x })
    }
}

/// A point of `[0, 1)` together with its first `precision` binary digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicPoint {
    value: f64,
    /// `floor(x * 2^precision)`; digit `x_0` is the most significant bit.
    bits: u64,
    precision: u32,
}

impl DyadicPoint {
    pub fn new(x: f64) -> Result<Self> {
        Self::with_precision(x, DEFAULT_PRECISION)
    }

    pub fn with_precision(x: f64, precision: u32) -> Result<Self> {
        check_unit("x", x)?;
        if precision == 0 || precision > 64 {
            return Err(Error::InvalidConfig("precision must be in 1..=64"));
        }
        // scaling by a power of two is exact, so the floor is the truncated expansion
        let bits = (x * (precision as f64).exp2()).floor() as u64;
        Ok(DyadicPoint { value: x, bits, precision })
    }

    fn from_bits(bits: u64, precision: u32) -> Self {
        // keep at most 53 significant digits so the conversion truncates instead of
        // rounding, which could otherwise carry up to 1.0
        let significant = 64 - bits.leading_zeros();
        let kept = if significant > 53 {
            bits & !((1u64 << (significant - 53)) - 1)
        } else {
            bits
        };
        let value = kept as f64 / (precision as f64).exp2();
        DyadicPoint { value, bits, precision }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Digit `x_k`, zero beyond the working precision.
    pub fn digit(&self, k: u32) -> u8 {
        if k >= self.precision {
            0
        } else {
            ((self.bits >> (self.precision - 1 - k)) & 1) as u8
        }
    }

    /// The value recomposed from the kept digits.
    pub fn truncated(&self) -> f64 {
        Self::from_bits(self.bits, self.precision).value
    }

    /// Digit-wise XOR with `other` at the smaller of the two precisions.
    pub fn dyadic_add(&self, other: &DyadicPoint) -> DyadicPoint {
        let m = self.precision.min(other.precision);
        let a = self.bits >> (self.precision - m);
        let b = other.bits >> (other.precision - m);
        Self::from_bits(a ^ b, m)
    }
}

/// Dyadic sum `x ∔ y` over the first `precision` digits.
pub fn dyadic_add(x: f64, y: f64, precision: u32) -> Result<f64> {
    let a = DyadicPoint::with_precision(x, precision)?;
    let b = DyadicPoint::with_precision(y, precision)?;
    Ok(a.dyadic_add(&b).value)
}

/// Dyadic sum of two naturals: XOR of their binary expansions.
#[inline]
pub fn nat_xor(i: usize, j: usize) -> usize {
    i ^ j
}

/// `I_n(i) = [(i-1)/2^n, i/2^n)` with a 1-based index `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicInterval {
    level: Level,
    index: usize,
}

impl DyadicInterval {
    pub fn new(level: Level, index: usize) -> Option<Self> {
        (1..=level.size())
            .contains(&index)
            .then_some(DyadicInterval { level, index })
    }

    /// The interval of level `n` that contains `x`.
    pub fn containing(x: f64, level: Level) -> Result<Self> {
        Ok(DyadicInterval { level, index: interval_index(x, level)? })
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn left(&self) -> f64 {
        (self.index - 1) as f64 * self.level.width()
    }

    pub fn right(&self) -> f64 {
        self.index as f64 * self.level.width()
    }

    pub fn midpoint(&self) -> f64 {
        (2 * self.index - 1) as f64 * self.level.width() * 0.5
    }

    pub fn contains(&self, x: f64) -> bool {
        self.left() <= x && x < self.right()
    }
}

/// 1-based index of the cell of level `n` containing `x`, i.e. `floor(2^n x) + 1`.
pub fn interval_index(x: f64, level: Level) -> Result<usize> {
    check_unit("x", x)?;
    Ok(cell_of(x, level) + 1)
}

/// 0-based cell index of `x`, for callers that have already checked the domain.
#[inline]
pub(crate) fn cell_of(x: f64, level: Level) -> usize {
    let c = (x * level.size() as f64).floor() as usize;
    c.min(level.size() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_add_examples() {
        for &x in &[0.0, 0.3, 0.5, 0.999] {
            assert_eq!(dyadic_add(x, 0.0, DEFAULT_PRECISION).unwrap(), x);
        }
        assert_eq!(dyadic_add(0.5, 0.5, 52).unwrap(), 0.0);
        assert_eq!(dyadic_add(0.25, 0.5, 52).unwrap(), 0.75);
        // 0.75 = .11, 0.625 = .101 -> .011
        assert_eq!(dyadic_add(0.75, 0.625, 52).unwrap(), 0.375);
    }

    #[test]
    fn dyadic_add_stays_below_one() {
        let x = 1.0 - f64::EPSILON / 2.0;
        let y = 2f64.powi(-60);
        let s = dyadic_add(x, y, DEFAULT_PRECISION).unwrap();
        assert!(s < 1.0 && s > 0.999);
    }

    #[test]
    fn dyadic_add_domain() {
        assert!(matches!(dyadic_add(1.0, 0.2, 52), Err(Error::Domain { .. })));
        assert!(matches!(dyadic_add(0.2, -0.1, 52), Err(Error::Domain { .. })));
        assert!(dyadic_add(0.2, f64::NAN, 52).is_err());
    }

    #[test]
    fn low_precision_truncates() {
        // 0.3 = .0100110011..., first three digits .010
        assert_eq!(dyadic_add(0.3, 0.0, 3).unwrap(), 0.25);
    }

    #[test]
    fn nat_xor_examples() {
        for i in 0..20 {
            assert_eq!(nat_xor(i, 0), i);
            assert_eq!(nat_xor(i, i), 0);
        }
        assert_eq!(nat_xor(5, 3), 6);
    }

    #[test]
    fn digits_use_terminating_expansion() {
        let half = DyadicPoint::new(0.5).unwrap();
        assert_eq!(half.digit(0), 1);
        assert!((1..60).all(|k| half.digit(k) == 0));
        let p = DyadicPoint::new(0.3).unwrap();
        assert_eq!((0..4).map(|k| p.digit(k)).collect::<Vec<_>>(), vec![0, 1, 0, 0]);
        assert_eq!(p.truncated(), 0.3);
        let coarse = DyadicPoint::with_precision(0.3, 10).unwrap();
        assert!((coarse.truncated() - 0.3).abs() < 2f64.powi(-10));
    }

    #[test]
    fn interval_index_examples() {
        for n in 0..8 {
            assert_eq!(interval_index(0.0, Level::new(n).unwrap()).unwrap(), 1);
        }
        assert_eq!(interval_index(0.5, Level::new(1).unwrap()).unwrap(), 2);
        assert_eq!(interval_index(0.5, Level::new(4).unwrap()).unwrap(), 9);
        assert!(interval_index(1.0, Level::new(2).unwrap()).is_err());
    }

    #[test]
    fn interval_index_matches_membership_scan() {
        for n in 0..7 {
            let level = Level::new(n).unwrap();
            for s in 0..1000 {
                let x = s as f64 / 1000.0;
                let i = interval_index(x, level).unwrap();
                let scanned = (1..=level.size())
                    .find(|&j| DyadicInterval::new(level, j).unwrap().contains(x))
                    .unwrap();
                assert_eq!(i, scanned, "x = {x}, n = {n}");
            }
        }
    }

    #[test]
    fn level_bounds() {
        assert!(Level::new(Level::MAX).is_ok());
        assert!(matches!(Level::new(31), Err(Error::InvalidLevel(31))));
        assert_eq!(Level::from_len(64).unwrap().get(), 6);
        assert!(Level::from_len(48).is_err());
        assert!(Level::from_len(0).is_err());
    }

    #[test]
    fn interval_geometry() {
        let iv = DyadicInterval::new(Level::new(3).unwrap(), 3).unwrap();
        assert_eq!((iv.left(), iv.midpoint(), iv.right()), (0.25, 0.3125, 0.375));
        assert!(iv.contains(0.25) && !iv.contains(0.375));
        assert!(DyadicInterval::new(Level::new(3).unwrap(), 0).is_none());
        assert!(DyadicInterval::new(Level::new(3).unwrap(), 9).is_none());
    }
}
