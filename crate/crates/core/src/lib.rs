//! Walsh–Paley discretization of linear first-order initial value problems
//!
//! ```text
//! y' + p(x) y = q(x),    y(xi) = eta,    x in [0, 1)
//! ```
//!
//! The unknown is sought as a Walsh polynomial of degree `2^n - 1`, which is the
//! same thing as a step function on the `2^n` dyadic cells of `[0, 1)`. Two
//! solution paths are provided and agree to rounding:
//!
//! - [`solver::multistep_solve`] sweeps the cells outward from the one that
//!   contains `xi`, one division per cell.
//! - [`solver::linear_solve`] assembles `(I + J^T P) c = eta e0 + J^T q` in the
//!   Walsh coefficient domain, where `J` is the operational matrix of
//!   integration and `P` the dyadic circulant generated by `p`.
//!
//! Supporting modules cover dyadic arithmetic ([`dyadic`]), Walsh functions and
//! the fast Walsh–Hadamard transform ([`walsh`]), cell averaging and moduli of
//! continuity ([`projection`]), the integration operators ([`triangular`]),
//! dyadic circulants ([`circulant`]), exact solutions and error tables
//! ([`reference`]) and a small expression language for coefficient functions
//! ([`exprparse`]).
//!
//! ```
//! use walsh_ivp::{Level, Problem, QuadratureConfig};
//!
//! // y' + y = (x + 1)^2, y(1/2) = 5/4, exact solution x^2 + 1
//! let problem = Problem::new(|_| 1.0, |x| (x + 1.0) * (x + 1.0), 0.5, 1.25).unwrap();
//! let sol = problem.solve_multistep(Level::new(6).unwrap(), &QuadratureConfig::default()).unwrap();
//! let y = sol.evaluate(0.25).unwrap();
//! assert!((y - 1.0625).abs() < 0.02);
//! ```

pub mod circulant;
pub mod dyadic;
mod error;
pub mod exprparse;
pub mod projection;
pub mod reference;
pub mod solver;
pub mod triangular;
pub mod walsh;

pub use circulant::DyadicCirculant;
pub use dyadic::{DyadicInterval, DyadicPoint, Level};
pub use error::{Error, Result};
pub use projection::{QuadratureConfig, StepFunction, WalshPolynomial};
pub use solver::{DiscreteSolution, Method, Problem, SolverDiagnostics};
