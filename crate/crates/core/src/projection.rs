//! Cell averages `S_{2^n} f`, Walsh–Fourier coefficients and dyadic moduli of
//! continuity.
//!
//! `S_{2^n} f` is the average of `f` over each dyadic cell of level `n`. Cell
//! integrals come from an adaptive Gauss–Legendre bisection; a cell whose
//! integral does not settle (an integrand singular inside the cell) is kept but
//! flagged undefined instead of aborting the projection.

use std::sync::OnceLock;

use crate::dyadic::{cell_of, check_unit, dyadic_add, Level, DEFAULT_PRECISION};
use crate::walsh::{fwht, inverse_fwht, walsh};
use crate::{Error, Result};

/// Tolerances for the adaptive cell quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Bisection depth after which a panel that has not converged fails.
    pub max_depth: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { abs_tol: 1e-11, rel_tol: 1e-10, max_depth: 40 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidConfig("abs_tol must be positive"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidConfig("rel_tol must be positive"));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidConfig("max_depth must be at least 1"));
        }
        Ok(())
    }
}

/// Why a quadrature gave up.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum QuadratureError {
    #[error("integrand is not finite near {at}")]
    NonFinite { at: f64 },
    #[error("no convergence on [{a}, {b}] at maximum depth")]
    NotConverged { a: f64, b: f64 },
}

const GAUSS_POINTS: usize = 7;

/// Nodes and weights of the 7-point Gauss–Legendre rule on `[-1, 1]`.
fn gauss_rule() -> &'static ([f64; GAUSS_POINTS], [f64; GAUSS_POINTS]) {
    static RULE: OnceLock<([f64; GAUSS_POINTS], [f64; GAUSS_POINTS])> = OnceLock::new();
    RULE.get_or_init(|| {
        let m = GAUSS_POINTS;
        let mut nodes = [0.0; GAUSS_POINTS];
        let mut weights = [0.0; GAUSS_POINTS];
        for i in 0..m {
            // Newton on P_m from the Chebyshev-like initial guess
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=m {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
                let step = p1 / dp;
                z -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = z;
            weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        // make the running sum of the weights exactly 2 so constants integrate exactly
        let head: f64 = weights[..m - 1].iter().fold(0.0, |acc, w| acc + w);
        weights[m - 1] = 2.0 - head;
        (nodes, weights)
    })
}

fn gauss_panel<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gauss_rule();
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = 0.0;
    for (z, w) in nodes.iter().zip(weights) {
        acc += w * f(c + r * z);
    }
    acc * r
}

/// Adaptive bisection of `∫_a^b f`, comparing each panel against its two halves.
pub fn integrate<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> std::result::Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, cfg).map(|v| -v);
    }
    let whole = gauss_panel(f, a, b);
    if !whole.is_finite() {
        return Err(QuadratureError::NonFinite { at: 0.5 * (a + b) });
    }
    adapt(f, a, b, whole, cfg.abs_tol, 0, cfg)
}

fn adapt<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    cfg: &QuadratureConfig,
) -> std::result::Result<f64, QuadratureError> {
    let m = 0.5 * (a + b);
    let left = gauss_panel(f, a, m);
    let right = gauss_panel(f, m, b);
    let sum = left + right;
    if !sum.is_finite() {
        return Err(QuadratureError::NonFinite { at: m });
    }
    if (sum - whole).abs() <= tol.max(cfg.rel_tol * sum.abs()) {
        return Ok(sum);
    }
    if depth + 1 >= cfg.max_depth || m <= a || m >= b {
        return Err(QuadratureError::NotConverged { a, b });
    }
    let l = adapt(f, a, m, left, 0.5 * tol, depth + 1, cfg)?;
    let r = adapt(f, m, b, right, 0.5 * tol, depth + 1, cfg)?;
    Ok(l + r)
}

/// A function constant on the dyadic cells of one level, with a per-cell
/// definedness mask.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    level: Level,
    cells: Vec<f64>,
    defined: Vec<bool>,
}

impl StepFunction {
    /// All cells defined; the length must be a power of two.
    pub fn new(cells: Vec<f64>) -> Result<Self> {
        let level = Level::from_len(cells.len())?;
        let defined = vec![true; cells.len()];
        Ok(StepFunction { level, cells, defined })
    }

    pub fn with_mask(cells: Vec<f64>, defined: Vec<bool>) -> Result<Self> {
        let level = Level::from_len(cells.len())?;
        crate::walsh::check_len(cells.len(), defined.len())?;
        Ok(StepFunction { level, cells, defined })
    }

    pub fn constant(level: Level, value: f64) -> Self {
        StepFunction { level, cells: vec![value; level.size()], defined: vec![true; level.size()] }
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Values indexed by 0-based cell (`cells()[i - 1]` is the value on `I_n(i)`).
    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn defined_mask(&self) -> &[bool] {
        &self.defined
    }

    pub fn is_fully_defined(&self) -> bool {
        self.defined.iter().all(|&d| d)
    }

    /// 1-based index of the first undefined cell, if any.
    pub fn first_undefined(&self) -> Option<usize> {
        self.defined.iter().position(|d| !d).map(|i| i + 1)
    }

    /// Value at `x`, `None` on an undefined cell.
    pub fn value_at(&self, x: f64) -> Result<Option<f64>> {
        check_unit("x", x)?;
        let c = cell_of(x, self.level);
        Ok(self.defined[c].then_some(self.cells[c]))
    }

    pub(crate) fn require_defined(&self) -> Result<()> {
        match self.first_undefined() {
            Some(cell) => Err(Error::UndefinedCell { cell }),
            None => Ok(()),
        }
    }
}

/// Coefficients `c_0..c_{2^n-1}` of `sum c_k w_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalshPolynomial {
    level: Level,
    coeffs: Vec<f64>,
}

impl WalshPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let level = Level::from_len(coeffs.len())?;
        Ok(WalshPolynomial { level, coeffs })
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Pointwise `sum c_k w_k(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (k, c) in self.coeffs.iter().enumerate() {
            acc += c * walsh(k as u64, x)? as f64;
        }
        Ok(acc)
    }

    /// Values on the cells, `W c`.
    pub fn samples(&self) -> Vec<f64> {
        fwht(&self.coeffs).expect("length is a power of two")
    }
}

/// `S_{2^n} f` by adaptive quadrature on each cell.
pub fn project<F>(f: &F, level: Level, cfg: &QuadratureConfig) -> Result<StepFunction>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    cfg.validate()?;
    let size = level.size();
    let width = level.width();
    let mut cells = Vec::with_capacity(size);
    let mut defined = Vec::with_capacity(size);
    for i in 0..size {
        let (a, b) = (i as f64 * width, (i + 1) as f64 * width);
        match integrate(f, a, b, cfg) {
            Ok(v) => {
                cells.push(v * size as f64);
                defined.push(true);
            }
            Err(_) => {
                cells.push(f64::NAN);
                defined.push(false);
            }
        }
    }
    Ok(StepFunction { level, cells, defined })
}

/// Walsh–Fourier coefficients of a step function, `W^{-1} cells`.
pub fn fourier_coeffs(s: &StepFunction) -> Result<WalshPolynomial> {
    s.require_defined()?;
    WalshPolynomial::new(inverse_fwht(&s.cells)?)
}

/// `∫_0^1 f w_k` for a general integrand, by quadrature on the cells where `w_k`
/// is constant.
pub fn fourier_coefficient<F>(f: &F, k: u64, cfg: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    cfg.validate()?;
    let level = Level::new(u64::BITS - k.leading_zeros())?;
    let width = level.width();
    let mut acc = 0.0;
    for i in 0..level.size() {
        let a = i as f64 * width;
        let v = integrate(f, a, a + width, cfg).unwrap_or(f64::NAN);
        acc += walsh(k, a)? as f64 * v;
    }
    Ok(acc)
}

/// Sampling grid for the moduli of continuity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModulusGrid {
    /// Points `i / x_points` in `[0, 1)`.
    pub x_points: usize,
    /// Shifts `j 2^-n / h_points`, all strictly below `2^-n`.
    pub h_points: usize,
}

impl Default for ModulusGrid {
    fn default() -> Self {
        ModulusGrid { x_points: 4096, h_points: 64 }
    }
}

impl ModulusGrid {
    fn shifts(&self, level: Level) -> impl Iterator<Item = f64> + '_ {
        let step = level.width() / self.h_points.max(1) as f64;
        (0..self.h_points.max(1)).map(move |j| j as f64 * step)
    }
}

/// Running maximum that lets a non-finite value win.
fn max_propagating(acc: f64, v: f64) -> f64 {
    if !v.is_finite() || !acc.is_finite() {
        if acc.is_nan() {
            acc
        } else if v.is_nan() {
            v
        } else {
            f64::INFINITY
        }
    } else {
        acc.max(v)
    }
}

/// Grid estimate of `w_n f = sup |f(x ∔ h) - f(x)|` over `0 <= h < 2^-n`.
///
/// The estimate is a lower bound of the true supremum.
pub fn modulus_of_continuity<F>(f: &F, level: Level, grid: &ModulusGrid) -> f64
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let xs = grid.x_points.max(1);
    let shifts: Vec<f64> = grid.shifts(level).collect();
    let mut sup = 0.0f64;
    for i in 0..xs {
        let x = i as f64 / xs as f64;
        let fx = f(x);
        for &h in &shifts {
            let moved = dyadic_add(x, h, DEFAULT_PRECISION).expect("grid points lie in [0, 1)");
            sup = max_propagating(sup, (f(moved) - fx).abs());
        }
    }
    sup
}

/// Grid estimate of `w_n^(1) f = sup_h ∫_0^1 |f(x ∔ h) - f(x)| dx`; the inner
/// integral is a composite midpoint rule on the x grid.
pub fn integral_modulus<F>(f: &F, level: Level, grid: &ModulusGrid) -> f64
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let xs = grid.x_points.max(1);
    let points: Vec<(f64, f64)> = (0..xs)
        .map(|i| {
            let x = (i as f64 + 0.5) / xs as f64;
            (x, f(x))
        })
        .collect();
    let mut sup = 0.0f64;
    for h in grid.shifts(level) {
        let mut acc = 0.0;
        for &(x, fx) in &points {
            let moved = dyadic_add(x, h, DEFAULT_PRECISION).expect("grid points lie in [0, 1)");
            acc += (f(moved) - fx).abs();
        }
        sup = max_propagating(sup, acc / xs as f64);
    }
    sup
}
