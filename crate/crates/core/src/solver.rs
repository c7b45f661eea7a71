//! The two solution paths for the discretized problem
//!
//! ```text
//! y_n = eta + S_{2^n}(∫_xi^. (S_{2^n} q - S_{2^n} p · y_n))
//! ```
//!
//! [`multistep_solve`] works on cell values. It first solves the cell holding
//! `xi` in closed form, then sweeps forward to the last cell and backward to the
//! first, each step a single division by `1 ± p_i / 2^{n+1}`.
//!
//! [`linear_solve`] works on Walsh coefficients and solves
//! `(I + Ĵ^T P) c = eta e_0 + Ĵ^T q̂` with a dense LU factorization. Its
//! determinant has the closed product form [`determinant_product`].

use nalgebra::{DMatrix, DVector};

use crate::circulant::DyadicCirculant;
use crate::dyadic::{check_unit, interval_index, Level};
use crate::projection::{fourier_coeffs, project, QuadratureConfig, StepFunction, WalshPolynomial};
use crate::triangular::operational_matrix;
use crate::walsh::{check_len, fwht};
use crate::{Error, Result};

/// Which discretization produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Multistep,
    Linear,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Multistep => "multistep",
            Method::Linear => "linear",
        })
    }
}

/// The Walsh polynomial `y_n`, as cell values and optionally as coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    level: Level,
    samples: StepFunction,
    coefficients: Option<WalshPolynomial>,
    method: Method,
}

impl DiscreteSolution {
    pub fn level(&self) -> Level {
        self.level
    }

    /// Values `y_n((i-1)/2^n)` on each cell, with the definedness mask.
    pub fn samples(&self) -> &StepFunction {
        &self.samples
    }

    pub fn coefficients(&self) -> Option<&WalshPolynomial> {
        self.coefficients.as_ref()
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// `y_n(x)`; NaN on an undefined cell.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        Ok(self.samples.value_at(x)?.unwrap_or(f64::NAN))
    }
}

/// Quantities that certify a level is fine enough.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverDiagnostics {
    pub level: Level,
    /// Smallest level satisfying the existence bound, if one was found.
    pub n_star: Option<Level>,
    /// `max_i |p_n(i/2^n)| / 2^n` at `level`.
    pub max_scaled_p: f64,
    /// `det(I + Ĵ^T P)` by the product formula.
    pub determinant: f64,
    /// 1-based cell containing `xi`.
    pub k_star: usize,
}

/// `max_i |p_i| / 2^n`; infinite if a cell is undefined.
pub fn max_scaled_p(p_cells: &StepFunction) -> f64 {
    if !p_cells.is_fully_defined() {
        return f64::INFINITY;
    }
    let scale = p_cells.level().width();
    p_cells.cells().iter().fold(0.0f64, |m, v| m.max(v.abs() * scale))
}

/// Smallest `n` in `1..=n_max` with `max_i |S_{2^n} p(i/2^n)| / 2^n < 1/2`.
pub fn find_n_star<F>(p: &F, n_max: u32, cfg: &QuadratureConfig) -> Result<Level>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let mut best = f64::INFINITY;
    for n in 1..=n_max {
        let level = Level::new(n)?;
        let scaled = max_scaled_p(&project(p, level, cfg)?);
        if scaled < 0.5 {
            return Ok(level);
        }
        if scaled.is_finite() {
            best = best.min(scaled);
        }
    }
    Err(Error::ThresholdNotReached { n_max, best })
}

fn check_divisor(cell: usize, divisor: f64) -> Result<f64> {
    if divisor.abs() > 0.25 {
        Ok(divisor)
    } else {
        Err(Error::SmallDivisor { cell: cell + 1, divisor })
    }
}

/// Cell-by-cell solution of the discretized integral equation.
///
/// Cells reached only through an undefined `q` cell are left undefined: the
/// forward sweep stops at the first undefined cell above `k*`, the backward sweep
/// at the first one below it.
pub fn multistep_solve(
    p_cells: &StepFunction,
    q_cells: &StepFunction,
    xi: f64,
    eta: f64,
) -> Result<DiscreteSolution> {
    check_len(p_cells.len(), q_cells.len())?;
    p_cells.require_defined()?;
    let level = p_cells.level();
    let size = level.size();
    let width = level.width();
    let half = 0.5 * width;
    let ks = interval_index(xi, level)? - 1;
    let p = p_cells.cells();
    let q = q_cells.cells();
    let q_ok = q_cells.defined_mask();

    let mid_offset = (ks as f64 * width + half) - xi;
    let start = check_divisor(ks, 1.0 + p[ks] * mid_offset)?;
    let mut forward = Vec::with_capacity(size);
    for (i, pi) in p.iter().enumerate() {
        let d = if i < ks { 1.0 - pi * half } else { 1.0 + pi * half };
        forward.push(if i == ks { start } else { check_divisor(i, d)? });
    }

    let mut y = vec![f64::NAN; size];
    let mut defined = vec![false; size];
    if q_ok[ks] {
        y[ks] = (eta + q[ks] * mid_offset) / start;
        defined[ks] = true;

        // acc holds eta plus the contributions of the cells already swept
        let mut acc = eta + (q[ks] - p[ks] * y[ks]) * ((ks + 1) as f64 * width - xi);
        for i in ks + 1..size {
            if !q_ok[i] {
                break;
            }
            y[i] = (acc + q[i] * half) / forward[i];
            defined[i] = true;
            acc += (q[i] - p[i] * y[i]) * width;
        }

        let mut acc = eta + (q[ks] - p[ks] * y[ks]) * (ks as f64 * width - xi);
        for i in (0..ks).rev() {
            if !q_ok[i] {
                break;
            }
            y[i] = (acc - q[i] * half) / forward[i];
            defined[i] = true;
            acc -= (q[i] - p[i] * y[i]) * width;
        }
    }

    Ok(DiscreteSolution {
        level,
        samples: StepFunction::with_mask(y, defined)?,
        coefficients: None,
        method: Method::Multistep,
    })
}

/// `I + Ĵ^T P` for the circulant `P` generated by `p_hat`.
pub fn system_matrix(p_hat: &WalshPolynomial, xi: f64) -> Result<DMatrix<f64>> {
    let level = p_hat.level();
    let jt = operational_matrix(level, xi)?.transposed();
    let p = DyadicCirculant::from_polynomial(p_hat).dense();
    Ok(DMatrix::identity(level.size(), level.size()) + jt * p)
}

/// Coefficient-domain solve of `(I + Ĵ^T P) c = eta e_0 + Ĵ^T q̂`.
pub fn linear_solve(
    p_hat: &WalshPolynomial,
    q_hat: &WalshPolynomial,
    xi: f64,
    eta: f64,
) -> Result<DiscreteSolution> {
    check_len(p_hat.coeffs().len(), q_hat.coeffs().len())?;
    check_unit("xi", xi)?;
    let level = p_hat.level();
    let size = level.size();
    let jt = operational_matrix(level, xi)?.transposed();
    let p = DyadicCirculant::from_polynomial(p_hat).dense();
    let m = DMatrix::identity(size, size) + &jt * p;
    let mut rhs = &jt * DVector::from_column_slice(q_hat.coeffs());
    rhs[0] += eta;

    // Hadamard's inequality bounds |det| by the product of row norms
    let log_scale: f64 = m.row_iter().map(|r| r.norm().ln()).sum();
    let lu = m.lu();
    let log_det: f64 = lu.u().diagonal().iter().map(|d| d.abs().ln()).sum();
    if !(log_det.is_finite() && log_det > 1e-12f64.ln() + log_scale) {
        return Err(Error::Singular { det: lu.determinant(), scale: log_scale.exp() });
    }
    let c = lu
        .solve(&rhs)
        .ok_or(Error::Singular { det: 0.0, scale: log_scale.exp() })?;
    let coeffs = c.as_slice().to_vec();
    let samples = StepFunction::new(fwht(&coeffs)?)?;
    Ok(DiscreteSolution {
        level,
        samples,
        coefficients: Some(WalshPolynomial::new(coeffs)?),
        method: Method::Linear,
    })
}

/// `det(I + Ĵ^T P)` from the cell values of `p`:
/// `prod_{i<k*-1} (1 - p_i/2^{n+1}) · (1 + ((2k*-1)/2^{n+1} - xi) p_{k*-1}) · prod_{j>=k*} (1 + p_j/2^{n+1})`.
pub fn determinant_product(p_cells: &StepFunction, xi: f64) -> Result<f64> {
    p_cells.require_defined()?;
    let level = p_cells.level();
    let ks = interval_index(xi, level)? - 1;
    let width = level.width();
    let half = 0.5 * width;
    let p = p_cells.cells();
    let below: f64 = p[..ks].iter().map(|v| 1.0 - v * half).product();
    let middle = 1.0 + ((ks as f64 * width + half) - xi) * p[ks];
    let above: f64 = p[ks + 1..].iter().map(|v| 1.0 + v * half).product();
    Ok(below * middle * above)
}

/// Boxed coefficient function.
pub type Coefficient = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// `y' + p y = q` on `[0, 1)` with `y(xi) = eta`.
pub struct Problem {
    p: Coefficient,
    q: Coefficient,
    xi: f64,
    eta: f64,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem").field("xi", &self.xi).field("eta", &self.eta).finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new<P, Q>(p: P, q: Q, xi: f64, eta: f64) -> Result<Self>
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
        Q: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_unit("xi", xi)?;
        Ok(Problem { p: Box::new(p), q: Box::new(q), xi, eta })
    }

    pub fn p(&self) -> &(dyn Fn(f64) -> f64 + Send + Sync) {
        &*self.p
    }

    pub fn q(&self) -> &(dyn Fn(f64) -> f64 + Send + Sync) {
        &*self.q
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `(S_{2^n} p, S_{2^n} q)`.
    pub fn project(&self, level: Level, cfg: &QuadratureConfig) -> Result<(StepFunction, StepFunction)> {
        Ok((project(self.p(), level, cfg)?, project(self.q(), level, cfg)?))
    }

    pub fn solve_multistep(&self, level: Level, cfg: &QuadratureConfig) -> Result<DiscreteSolution> {
        let (p, q) = self.project(level, cfg)?;
        multistep_solve(&p, &q, self.xi, self.eta)
    }

    /// Fails with [`Error::UndefinedCell`] when `p` or `q` has a singular cell.
    pub fn solve_linear(&self, level: Level, cfg: &QuadratureConfig) -> Result<DiscreteSolution> {
        let (p, q) = self.project(level, cfg)?;
        linear_solve(&fourier_coeffs(&p)?, &fourier_coeffs(&q)?, self.xi, self.eta)
    }

    pub fn solve(&self, level: Level, method: Method, cfg: &QuadratureConfig) -> Result<DiscreteSolution> {
        match method {
            Method::Multistep => self.solve_multistep(level, cfg),
            Method::Linear => self.solve_linear(level, cfg),
        }
    }

    /// Diagnostics at `level`; `n*` is searched up to `n_max`.
    pub fn diagnostics(&self, level: Level, n_max: u32, cfg: &QuadratureConfig) -> Result<SolverDiagnostics> {
        let p_cells = project(self.p(), level, cfg)?;
        let n_star = match find_n_star(self.p(), n_max, cfg) {
            Ok(l) => Some(l),
            Err(Error::ThresholdNotReached { .. }) => None,
            Err(e) => return Err(e),
        };
        let determinant = if p_cells.is_fully_defined() {
            determinant_product(&p_cells, self.xi)?
        } else {
            f64::NAN
        };
        Ok(SolverDiagnostics {
            level,
            n_star,
            max_scaled_p: max_scaled_p(&p_cells),
            determinant,
            k_star: interval_index(self.xi, level)?,
        })
    }
}
