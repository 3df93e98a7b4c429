//! Finite-sum objectives `F(w) = (1/n) Σ_i f_i(w)` with exact per-sample
//! gradients.

use std::ops::Range;

use crate::linalg::ParamVector;
use crate::rng::SeededRng;

pub mod data;
mod exp_family;
mod logistic;
mod mlp;
mod quadratic;

pub use data::{load_cifar10_binary, load_csv, parse_csv, DatasetMatrix};
pub use exp_family::{make_exp_family, ExpFamily};
pub use logistic::{make_logistic, Logistic};
pub use mlp::{make_mlp, Activation, Mlp};
pub use quadratic::{log_spaced, make_quadratic, Quadratic};

/// Constants known in closed form for a problem instance.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KnownConstants {
    /// Smoothness constant `L`; `None` when the problem is not L-smooth or
    /// the constant is unknown.
    pub smoothness: Option<f64>,
    /// `true` when `smoothness` is a (possibly loose) upper bound rather than
    /// the exact constant.
    pub smoothness_is_upper_bound: bool,
    /// `(L, λ)` for relaxed smoothness `‖∇²F‖ ≤ L + λ‖∇F‖`.
    pub relaxed: Option<(f64, f64)>,
    pub f_star: Option<f64>,
    pub w_star: Option<ParamVector>,
}

/// An objective of the form `F(w) = (1/n) Σ f_i(w)`.
///
/// Implementors provide per-sample losses and gradients; batch and full
/// evaluations default to averages over them. Evaluation must be pure.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    fn n_samples(&self) -> usize;

    fn dim(&self) -> usize;

    fn sample_loss(&self, i: usize, w: &[f64]) -> f64;

    /// Adds `∇f_i(w)` into `out`.
    fn add_sample_gradient(&self, i: usize, w: &[f64], out: &mut [f64]);

    fn sample_gradient(&self, i: usize, w: &[f64]) -> ParamVector {
        let mut out = vec![0.0; self.dim()];
        self.add_sample_gradient(i, w, &mut out);
        ParamVector::new(out)
    }

    fn batch_loss(&self, indices: &[usize], w: &[f64]) -> f64 {
        let sum: f64 = indices.iter().map(|&i| self.sample_loss(i, w)).sum();
        sum / indices.len() as f64
    }

    fn batch_gradient(&self, indices: &[usize], w: &[f64]) -> ParamVector {
        let mut out = vec![0.0; self.dim()];
        for &i in indices {
            self.add_sample_gradient(i, w, &mut out);
        }
        let inv = 1.0 / indices.len() as f64;
        for v in &mut out {
            *v *= inv;
        }
        self.shape(ParamVector::new(out))
    }

    fn loss(&self, w: &[f64]) -> f64 {
        let sum: f64 = (0..self.n_samples()).map(|i| self.sample_loss(i, w)).sum();
        sum / self.n_samples() as f64
    }

    fn full_gradient(&self, w: &[f64]) -> ParamVector {
        let all: Vec<usize> = (0..self.n_samples()).collect();
        self.batch_gradient(&all, w)
    }

    fn constants(&self) -> KnownConstants {
        KnownConstants::default()
    }

    fn layer_bounds(&self) -> Option<Vec<Range<usize>>> {
        None
    }

    /// Whether the Hessian exists everywhere (required by relaxed-smoothness fits).
    fn twice_differentiable(&self) -> bool {
        true
    }

    /// Default starting point for training.
    fn initial_point(&self, _rng: &mut SeededRng) -> ParamVector {
        self.shape(ParamVector::zeros(self.dim()))
    }

    /// Whether sample `i` is classified correctly at `w`; `None` for
    /// problems without a notion of accuracy.
    fn sample_correct(&self, _i: usize, _w: &[f64]) -> Option<bool> {
        None
    }

    /// Whether the segment `w ± eps·dir` crosses a point where the gradient
    /// is discontinuous. Finite-difference checks resample such points.
    fn nonsmooth_between(&self, _w: &[f64], _dir: &[f64], _eps: f64) -> bool {
        false
    }

    /// Attaches this problem's layer segmentation to a vector of matching dimension.
    fn shape(&self, v: ParamVector) -> ParamVector {
        match self.layer_bounds() {
            Some(layers) => v
                .with_layers(layers)
                .expect("problem layer bounds partition its dimension"),
            None => v,
        }
    }
}

/// Outcome of [`gradient_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientCheck {
    pub points: usize,
    pub max_rel_error: f64,
    /// Draws discarded because the stencil straddled a kink.
    pub resampled: usize,
}

/// Relative disagreement between `∇F(w)·v` and the central difference
/// `(F(w+εv) − F(w−εv))/2ε`. The denominator is floored at 1e-8.
pub fn directional_derivative_error(problem: &dyn Problem, w: &[f64], v: &[f64], eps: f64) -> f64 {
    let analytic = crate::linalg::dot(problem.full_gradient(w).as_slice(), v);
    let plus: Vec<f64> = w.iter().zip(v).map(|(a, b)| a + eps * b).collect();
    let minus: Vec<f64> = w.iter().zip(v).map(|(a, b)| a - eps * b).collect();
    let numeric = (problem.loss(&plus) - problem.loss(&minus)) / (2.0 * eps);
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Checks the full gradient against central differences at `points` random
/// `(w, v)` pairs: `w` is the problem's initial point plus a uniform
/// perturbation in `[−radius, radius]`, `v` a random unit direction.
/// Pairs whose stencil crosses a kink are redrawn (at most 100 times each).
pub fn gradient_check(
    problem: &dyn Problem,
    rng: &mut SeededRng,
    points: usize,
    radius: f64,
    eps: f64,
) -> GradientCheck {
    let dim = problem.dim();
    let mut max_rel_error: f64 = 0.0;
    let mut resampled = 0;
    for _ in 0..points {
        for attempt in 0.. {
            let base = problem.initial_point(rng);
            let w: Vec<f64> = base
                .as_slice()
                .iter()
                .map(|x| x + rng.uniform_in(-radius, radius))
                .collect();
            let v = rng.unit_vector(dim);
            if attempt < 100 && problem.nonsmooth_between(&w, &v, eps) {
                resampled += 1;
                continue;
            }
            max_rel_error = max_rel_error.max(directional_derivative_error(problem, &w, &v, eps));
            break;
        }
    }
    GradientCheck {
        points,
        max_rel_error,
        resampled,
    }
}
