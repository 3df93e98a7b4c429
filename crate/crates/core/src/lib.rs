//! Stochastic normalized gradient descent with momentum (SNGM) and the
//! baselines it is usually compared against (MSGD, SNGD, LARS), together
//! with a small suite of objectives with exact gradients and executable
//! forms of the convergence bounds and hyperparameter rules for these
//! methods.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] and [`rng`]: dense `f64` vectors and a portable seeded PRNG.
//! * [`problems`]: finite-sum objectives `F(w) = (1/n) Σ f_i(w)`.
//! * [`optimizers`]: update rules, learning-rate schedules, gradient accumulation.
//! * [`theory`]: constant estimators, bound right-hand sides, batch/lr plans.

pub mod error;
pub mod linalg;
pub mod optimizers;
pub mod problems;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
pub use linalg::{axpy, euclidean_norm, ParamVector};
pub use rng::{sample_indices_without_replacement, SeededRng};
