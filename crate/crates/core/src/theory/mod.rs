//! Executable theory: empirical estimates of `L`, `λ` and `σ`, the gradient
//! growth check for relaxed-smooth functions, bound right-hand sides and
//! budget plans.

use crate::linalg::{euclidean_norm, ParamVector};
use crate::problems::Problem;
use crate::rng::SeededRng;

mod bounds;
mod fit;

pub use bounds::{
    corollary1_plan, corollary2_plan, corollary3_plan, kappa, msgd_bound_rhs, msgd_max_batch,
    msgd_max_eta, sngm_bound_rhs, BudgetPlan, ConstantSource, Regime, SmoothnessParams,
};
pub use fit::{
    fit_envelope, fit_relaxed_smoothness, hessian_norm, HessianNorm, RelaxedFit, FD_STEP,
    POWER_ITERATIONS, POWER_TOLERANCE,
};

/// Axis-aligned box `center ± radius` used to draw evaluation points.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBox {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl SampleBox {
    pub fn around_origin(dim: usize, radius: f64) -> Self {
        Self {
            center: vec![0.0; dim],
            radius,
        }
    }

    pub fn sample(&self, rng: &mut SeededRng) -> ParamVector {
        ParamVector::new(
            self.center
                .iter()
                .map(|c| c + rng.uniform_in(-self.radius, self.radius))
                .collect(),
        )
    }
}

/// Empirical noise level: the max over `points` of
/// `sqrt(mean_i ‖∇f_i(w) − ∇F(w)‖²)`. A lower estimate of the supremum `σ`.
pub fn estimate_sigma(problem: &dyn Problem, points: &[ParamVector]) -> f64 {
    let n = problem.n_samples();
    points
        .iter()
        .map(|w| {
            let w = w.as_slice();
            let full = problem.full_gradient(w);
            let total: f64 = (0..n)
                .map(|i| {
                    let gi = problem.sample_gradient(i, w);
                    let diff: Vec<f64> = gi
                        .as_slice()
                        .iter()
                        .zip(full.as_slice())
                        .map(|(a, b)| a - b)
                        .collect();
                    let d = euclidean_norm(&diff);
                    d * d
                })
                .sum();
            (total / n as f64).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Empirical gradient Lipschitz constant: the max over `trials` random
/// pairs in `domain` of `‖∇F(u) − ∇F(w)‖ / ‖u − w‖`. A lower bound on `L`.
pub fn estimate_l(
    problem: &dyn Problem,
    rng: &mut SeededRng,
    trials: usize,
    domain: &SampleBox,
) -> f64 {
    let mut best: f64 = 0.0;
    for _ in 0..trials {
        let w = domain.sample(rng);
        let u = domain.sample(rng);
        let dist = w.distance(&u).expect("same dimension");
        if dist == 0.0 {
            continue;
        }
        let gw = problem.full_gradient(w.as_slice());
        let gu = problem.full_gradient(u.as_slice());
        let ratio = gw.distance(&gu).expect("same dimension") / dist;
        best = best.max(ratio);
    }
    best
}

/// Gradient growth for `(L, λ)`-smooth functions: with `α = ‖u − w‖`,
/// `‖∇F(u)‖ ≤ (Lα + ‖∇F(w)‖)·e^{λα}` (plus `1e-9` slack).
pub fn check_lemma1(
    problem: &dyn Problem,
    w: &ParamVector,
    u: &ParamVector,
    l: f64,
    lambda: f64,
) -> bool {
    let alpha = w.distance(u).expect("same dimension");
    let gw = problem.full_gradient(w.as_slice()).norm();
    let gu = problem.full_gradient(u.as_slice()).norm();
    gu <= (l * alpha + gw) * (lambda * alpha).exp() + 1e-9
}

/// Summary of full-batch gradient norms along a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct StationarityReport {
    /// `(1/T) Σ ‖∇F(w_t)‖`, compared against the SNGM bounds.
    pub avg_grad_norm: f64,
    /// `(1/T) Σ ‖∇F(w_t)‖²`, compared against the MSGD bound.
    pub avg_sq_grad_norm: f64,
    pub min_grad_norm: f64,
    pub points: usize,
    /// Right-hand side the average was checked against, when evaluated.
    pub bound_rhs: Option<f64>,
    /// Smallest `ε` for which some recorded iterate is ε-stationary.
    pub epsilon_achieved: f64,
}

impl StationarityReport {
    /// Builds the report from per-iterate gradient norms. Returns `None` for
    /// an empty trajectory.
    pub fn from_grad_norms(norms: &[f64]) -> Option<Self> {
        if norms.is_empty() {
            return None;
        }
        let k = norms.len() as f64;
        let avg = norms.iter().sum::<f64>() / k;
        let avg_sq = norms.iter().map(|g| g * g).sum::<f64>() / k;
        let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
        Some(Self {
            avg_grad_norm: avg,
            avg_sq_grad_norm: avg_sq,
            min_grad_norm: min,
            points: norms.len(),
            bound_rhs: None,
            epsilon_achieved: min,
        })
    }
}

/// Full-batch gradient norms at each recorded iterate, summarized.
pub fn stationarity(
    problem: &dyn Problem,
    trajectory: &[ParamVector],
) -> Option<StationarityReport> {
    let norms: Vec<f64> = trajectory
        .iter()
        .map(|w| problem.full_gradient(w.as_slice()).norm())
        .collect();
    StationarityReport::from_grad_norms(&norms)
}
