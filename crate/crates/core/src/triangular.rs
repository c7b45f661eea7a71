//! Integration operators on the dyadic grid.
//!
//! `J_k^xi(x) = ∫_xi^x w_k` are the triangular functions; `Ĵ^xi` is the matrix of
//! their Walsh–Fourier coefficients. On step functions of level `n` the operator
//! `f ↦ S_{2^n}(∫_xi^. f)` has a simple three-regime form that depends only on
//! where a cell sits relative to the cell `k*` containing `xi`. That cell-domain
//! matrix equals `W^{-1} Ĵ^T W`, and it is how `Ĵ` is built here.

use nalgebra::DMatrix;

use crate::dyadic::{cell_of, check_unit, interval_index, Level};
use crate::projection::StepFunction;
use crate::walsh::{fwht_in_place, walsh_at_grid};
use crate::Result;

/// `J_k^xi(x) = ∫_xi^x w_k(t) dt`, exact up to rounding. Negative orientation when
/// `x < xi`.
pub fn triangular_j(k: u64, xi: f64, x: f64) -> Result<f64> {
    check_unit("xi", xi)?;
    check_unit("x", x)?;
    let (lo, hi, sign) = if x >= xi { (xi, x, 1.0) } else { (x, xi, -1.0) };
    // w_k is constant on the cells of this level
    let level = Level::new(u64::BITS - k.leading_zeros())?;
    let width = level.width();
    let mut acc = 0.0;
    for c in cell_of(lo, level)..=cell_of(hi, level) {
        let a = lo.max(c as f64 * width);
        let b = hi.min((c + 1) as f64 * width);
        if b > a {
            acc += walsh_at_grid(k as usize, c, level) as f64 * (b - a);
        }
    }
    Ok(sign * acc)
}

/// Checks `J_k^xi(x) = J_k^0(x) - J_k^0(xi)` to `1e-14`.
pub fn shift_identity_check(k: u64, xi: f64, x: f64) -> bool {
    match (triangular_j(k, xi, x), triangular_j(k, 0.0, x), triangular_j(k, 0.0, xi)) {
        (Ok(direct), Ok(jx), Ok(jxi)) => (direct - (jx - jxi)).abs() <= 1e-14,
        _ => false,
    }
}

/// Position of `xi` on the grid, with the constants every operator here needs.
#[derive(Debug, Clone, Copy)]
struct Anchor {
    size: usize,
    /// 0-based cell containing xi (`k* - 1`).
    cell: usize,
    width: f64,
    half: f64,
    /// `(k*-1)/2^n - xi`, `(2k*-1)/2^{n+1} - xi`, `k*/2^n - xi`
    below: f64,
    middle: f64,
    above: f64,
}

impl Anchor {
    fn new(level: Level, xi: f64) -> Result<Self> {
        let cell = interval_index(xi, level)? - 1;
        let width = level.width();
        let left = cell as f64 * width;
        Ok(Anchor {
            size: level.size(),
            cell,
            width,
            half: 0.5 * width,
            below: left - xi,
            middle: (left + 0.5 * width) - xi,
            above: (cell + 1) as f64 * width - xi,
        })
    }

    /// `S_{2^n}(∫_xi^. χ_{I_n(k+1)})` on cell `i` (both 0-based).
    fn weight(&self, i: usize, k: usize) -> f64 {
        use std::cmp::Ordering::*;
        match (k.cmp(&self.cell), i.cmp(&k)) {
            // cell k lies below xi
            (Less, Less) => -self.width,
            (Less, Equal) => -self.half,
            (Less, Greater) => 0.0,
            // cell k holds xi
            (Equal, Less) => self.below,
            (Equal, Equal) => self.middle,
            (Equal, Greater) => self.above,
            // cell k lies above xi
            (Greater, Less) => 0.0,
            (Greater, Equal) => self.half,
            (Greater, Greater) => self.width,
        }
    }
}

/// Per-cell integration weights: `weights[(i, k)]` is the value on cell `i` of
/// `S_{2^n}(∫_xi^. χ_k)`, both indices 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationWeights {
    level: Level,
    xi: f64,
    k_star: usize,
    weights: DMatrix<f64>,
}

impl IntegrationWeights {
    pub fn level(&self) -> Level {
        self.level
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// 1-based index of the cell containing `xi`.
    pub fn k_star(&self) -> usize {
        self.k_star
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// `sum_k weights[(i, k)] a_k` for every cell `i`.
    pub fn apply(&self, cells: &[f64]) -> Result<Vec<f64>> {
        crate::walsh::check_len(self.level.size(), cells.len())?;
        Ok((&self.weights * nalgebra::DVector::from_column_slice(cells)).as_slice().to_vec())
    }
}

pub fn integration_weights(level: Level, xi: f64) -> Result<IntegrationWeights> {
    let anchor = Anchor::new(level, xi)?;
    let n = anchor.size;
    let weights = DMatrix::from_fn(n, n, |i, k| anchor.weight(i, k));
    Ok(IntegrationWeights { level, xi, k_star: anchor.cell + 1, weights })
}

/// `S_{2^n}(∫_xi^. f)` for a step function `f`, in `O(2^n)`.
pub fn step_integral(f: &StepFunction, xi: f64) -> Result<Vec<f64>> {
    let anchor = Anchor::new(f.level(), xi)?;
    let a = f.cells();
    let ks = anchor.cell;
    let mut out = vec![0.0; anchor.size];
    out[ks] = a[ks] * anchor.middle;

    let mut acc = a[ks] * anchor.above;
    for i in ks + 1..anchor.size {
        out[i] = acc + a[i] * anchor.half;
        acc += a[i] * anchor.width;
    }
    let mut acc = a[ks] * anchor.below;
    for i in (0..ks).rev() {
        out[i] = acc - a[i] * anchor.half;
        acc -= a[i] * anchor.width;
    }
    Ok(out)
}

/// The explicit form of `W^{-1} Ĵ^T W`, indices `0..2^n`.
pub fn lemma_conjugate(level: Level, xi: f64) -> Result<DMatrix<f64>> {
    let anchor = Anchor::new(level, xi)?;
    let ks = anchor.cell;
    let n = anchor.size;
    let mut t = DMatrix::zeros(n, n);
    for i in 0..ks {
        t[(i, i)] = -anchor.half;
        for j in i + 1..ks {
            t[(i, j)] = -anchor.width;
        }
        t[(i, ks)] = anchor.below;
    }
    t[(ks, ks)] = anchor.middle;
    for i in ks + 1..n {
        t[(i, ks)] = anchor.above;
        for j in ks + 1..i {
            t[(i, j)] = anchor.width;
        }
        t[(i, i)] = anchor.half;
    }
    Ok(t)
}

/// `Ĵ^xi`: entry `(k, j)` is the `j`-th Walsh–Fourier coefficient of `J_k^xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperationalMatrix {
    level: Level,
    xi: f64,
    entries: DMatrix<f64>,
}

impl OperationalMatrix {
    pub fn level(&self) -> Level {
        self.level
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// `Ĵ^T`, the form that appears in the coefficient-domain system.
    pub fn transposed(&self) -> DMatrix<f64> {
        self.entries.transpose()
    }
}

/// Builds `Ĵ^xi` from `Ĵ^T = W T W^{-1}` with row and column transforms,
/// `O(4^n n)`.
pub fn operational_matrix(level: Level, xi: f64) -> Result<OperationalMatrix> {
    let t = lemma_conjugate(level, xi)?;
    let n = level.size();
    // column-major storage: each chunk of n is a column
    let mut data = t.as_slice().to_vec();
    for col in data.chunks_exact_mut(n) {
        fwht_in_place(col)?;
    }
    // now W T; transpose and transform columns again to get (W T W)^T
    let mut data = DMatrix::from_vec(n, n, data).transpose().as_slice().to_vec();
    for col in data.chunks_exact_mut(n) {
        fwht_in_place(col)?;
    }
    let scale = 1.0 / n as f64;
    data.iter_mut().for_each(|v| *v *= scale);
    // (W T W)^T / 2^n = (Ĵ^T)^T
    Ok(OperationalMatrix { level, xi, entries: DMatrix::from_vec(n, n, data) })
}
