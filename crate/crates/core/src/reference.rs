//! Exact solutions, sup-error tables and the computable error bound `M_n`.
//!
//! The exact solution is
//!
//! ```text
//! y(x) = exp(-P(x)) (eta + ∫_xi^x q(t) exp(P(t)) dt),    P(t) = ∫_xi^t p
//! ```
//!
//! Error tables report `sup |y_n - y|` over the eight intervals `[j/8, (j+1)/8)`.

use crate::dyadic::{cell_of, Level};
use crate::projection::{integral_modulus, integrate, modulus_of_continuity, project};
use crate::projection::{ModulusGrid, QuadratureConfig};
use crate::solver::{max_scaled_p, DiscreteSolution, Method, Problem};
use crate::Result;

/// Panels on which `P` is tabulated between `xi` and `x`.
const EXPONENT_PANELS: usize = 32;

/// `y(x)` from the closed formula by nested adaptive quadrature.
///
/// Returns a non-finite value when either integral fails to converge.
pub fn exact_solution<P, Q>(p: &P, q: &Q, xi: f64, eta: f64, x: f64, cfg: &QuadratureConfig) -> f64
where
    P: Fn(f64) -> f64 + ?Sized,
    Q: Fn(f64) -> f64 + ?Sized,
{
    if x == xi {
        return eta;
    }
    let step = (x - xi) / EXPONENT_PANELS as f64;
    let mut knots = Vec::with_capacity(EXPONENT_PANELS + 1);
    let mut table = Vec::with_capacity(EXPONENT_PANELS + 1);
    let mut acc = 0.0;
    knots.push(xi);
    table.push(0.0);
    for k in 1..=EXPONENT_PANELS {
        let t = if k == EXPONENT_PANELS { x } else { xi + k as f64 * step };
        acc += integrate(p, knots[k - 1], t, cfg).unwrap_or(f64::NAN);
        knots.push(t);
        table.push(acc);
    }

    let exponent = |t: f64| {
        let k = (((t - xi) / step).floor().max(0.0) as usize).min(EXPONENT_PANELS - 1);
        table[k] + integrate(p, knots[k], t, cfg).unwrap_or(f64::NAN)
    };
    let inner = integrate(&|t: f64| q(t) * exponent(t).exp(), xi, x, cfg).unwrap_or(f64::NAN);
    (-table[EXPONENT_PANELS]).exp() * (eta + inner)
}

/// Sampling used for the sup over each eighth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupGrid {
    /// Uniform points per eighth.
    pub points_per_eighth: usize,
    /// Distance inside a cell at which its right end is approached.
    pub edge_offset: f64,
}

impl Default for SupGrid {
    fn default() -> Self {
        SupGrid { points_per_eighth: 512, edge_offset: 1e-9 }
    }
}

/// `sup |y_n - y|` on each `[j/8, (j+1)/8)`; `None` where the eighth touches an
/// undefined cell of `y_n`.
///
/// Besides the uniform points, both ends of every cell in the eighth are
/// sampled, since `|y_n - y|` on a cell peaks near an end for monotone `y`.
pub fn sup_error_eighths<Y>(sol: &DiscreteSolution, y_exact: &Y, grid: &SupGrid) -> [Option<f64>; 8]
where
    Y: Fn(f64) -> f64 + ?Sized,
{
    let samples = sol.samples();
    let level = samples.level();
    let width = level.width();
    let cells = samples.cells();
    let defined = samples.defined_mask();
    let mut out = [None; 8];
    for (j, slot) in out.iter_mut().enumerate() {
        let lo = j as f64 / 8.0;
        let hi = (j + 1) as f64 / 8.0;
        let first = cell_of(lo, level);
        let last = cell_of(hi - 0.5 * width.min(0.125), level);
        if !defined[first..=last].iter().all(|&d| d) {
            continue;
        }
        let mut xs: Vec<f64> = (0..grid.points_per_eighth)
            .map(|k| lo + (hi - lo) * k as f64 / grid.points_per_eighth as f64)
            .collect();
        for c in first..=last {
            let left = (c as f64 * width).max(lo);
            let right = ((c + 1) as f64 * width).min(hi);
            xs.push(left);
            xs.push(right - grid.edge_offset);
        }
        let sup = xs.iter().fold(0.0f64, |m, &x| {
            let e = (cells[cell_of(x, level)] - y_exact(x)).abs();
            if e.is_nan() || m.is_nan() {
                f64::NAN
            } else {
                m.max(e)
            }
        });
        *slot = Some(sup);
    }
    out
}

/// Sup errors per eighth for a range of levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub n_values: Vec<Level>,
    pub rows: Vec<[Option<f64>; 8]>,
}

impl ErrorTable {
    /// Largest defined entry of each row.
    pub fn row_max(&self) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .map(|r| r.iter().flatten().copied().reduce(f64::max))
            .collect()
    }
}

/// Solve at each level and tabulate the sup errors against `y_exact`.
pub fn error_table<Y>(
    problem: &Problem,
    y_exact: &Y,
    levels: &[Level],
    method: Method,
    cfg: &QuadratureConfig,
    grid: &SupGrid,
) -> Result<ErrorTable>
where
    Y: Fn(f64) -> f64 + ?Sized,
{
    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let sol = problem.solve(level, method, cfg)?;
        rows.push(sup_error_eighths(&sol, y_exact, grid));
    }
    Ok(ErrorTable { n_values: levels.to_vec(), rows })
}

/// `M_n` and its three terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBound {
    pub level: Level,
    pub m_n: f64,
    /// `(w1_n q, ‖y‖ w1_n p, 2 max_scaled_p w_n y)`.
    pub terms: (f64, f64, f64),
}

/// Grid estimate of `M_n`; `‖y‖` is taken over the modulus grid.
pub fn error_bound_mn<P, Q, Y>(
    p: &P,
    q: &Q,
    y_exact: &Y,
    level: Level,
    grid: &ModulusGrid,
    cfg: &QuadratureConfig,
) -> Result<ErrorBound>
where
    P: Fn(f64) -> f64 + ?Sized,
    Q: Fn(f64) -> f64 + ?Sized,
    Y: Fn(f64) -> f64 + ?Sized,
{
    let xs = grid.x_points.max(1);
    let y_sup = (0..xs).fold(0.0f64, |m, i| {
        let v = y_exact(i as f64 / xs as f64).abs();
        if v.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(v)
        }
    });
    let scaled = max_scaled_p(&project(p, level, cfg)?);
    let terms = (
        integral_modulus(q, level, grid),
        y_sup * integral_modulus(p, level, grid),
        2.0 * scaled * modulus_of_continuity(y_exact, level, grid),
    );
    Ok(ErrorBound { level, m_n: terms.0 + terms.1 + terms.2, terms })
}

/// `row[i+1][j] / row[i][j]`; `None` where either entry is undefined or the
/// denominator is zero.
pub fn halving_ratios(table: &ErrorTable) -> Vec<[Option<f64>; 8]> {
    table
        .rows
        .windows(2)
        .map(|w| {
            let mut r = [None; 8];
            for (j, slot) in r.iter_mut().enumerate() {
                if let (Some(a), Some(b)) = (w[0][j], w[1][j]) {
                    if a != 0.0 {
                        *slot = Some(b / a);
                    }
                }
            }
            r
        })
        .collect()
}
