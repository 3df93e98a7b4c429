use super::SampleBox;
use crate::linalg::ParamVector;
use crate::problems::Problem;
use crate::rng::SeededRng;

/// Central-difference step for Hessian-vector products.
pub const FD_STEP: f64 = 1e-5;
pub const POWER_ITERATIONS: usize = 50;
/// Relative change between successive estimates that counts as converged.
pub const POWER_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HessianNorm {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn hessian_vector(problem: &dyn Problem, w: &[f64], v: &[f64]) -> Vec<f64> {
    let plus: Vec<f64> = w.iter().zip(v).map(|(a, b)| a + FD_STEP * b).collect();
    let minus: Vec<f64> = w.iter().zip(v).map(|(a, b)| a - FD_STEP * b).collect();
    let gp = problem.full_gradient(&plus);
    let gm = problem.full_gradient(&minus);
    gp.as_slice()
        .iter()
        .zip(gm.as_slice())
        .map(|(a, b)| (a - b) / (2.0 * FD_STEP))
        .collect()
}

/// Spectral norm of `∇²F(w)` by power iteration on finite-difference
/// Hessian-vector products.
pub fn hessian_norm(problem: &dyn Problem, w: &[f64], rng: &mut SeededRng) -> HessianNorm {
    let mut v = rng.unit_vector(w.len());
    let mut prev = f64::NAN;
    for k in 1..=POWER_ITERATIONS {
        let hv = hessian_vector(problem, w, &v);
        let est = crate::linalg::euclidean_norm(&hv);
        if est == 0.0 || !est.is_finite() {
            return HessianNorm {
                value: est,
                iterations: k,
                converged: est == 0.0,
            };
        }
        if (est - prev).abs() <= POWER_TOLERANCE * est {
            return HessianNorm {
                value: est,
                iterations: k,
                converged: true,
            };
        }
        prev = est;
        v = hv.into_iter().map(|x| x / est).collect();
    }
    HessianNorm {
        value: prev,
        iterations: POWER_ITERATIONS,
        converged: false,
    }
}

/// Tightest line `h ≤ L + λ·g` over `(g, h)` samples with `L, λ ≥ 0`,
/// minimizing `L + λ·mean(g)`. Ties go to the smaller `L`.
pub fn fit_envelope(samples: &[(f64, f64)]) -> (f64, f64) {
    if samples.is_empty() {
        return (0.0, 0.0);
    }
    let mean_g = samples.iter().map(|s| s.0).sum::<f64>() / samples.len() as f64;
    let max_h = samples.iter().map(|s| s.1).fold(0.0, f64::max);

    let mut candidates = vec![(max_h, 0.0)];
    if samples.iter().all(|&(g, h)| g > 0.0 || h <= 0.0) {
        let slope = samples
            .iter()
            .filter(|s| s.0 > 0.0)
            .map(|&(g, h)| h / g)
            .fold(0.0, f64::max);
        candidates.push((0.0, slope));
    }
    for (i, &(gi, hi)) in samples.iter().enumerate() {
        for &(gj, hj) in &samples[i + 1..] {
            if gi == gj {
                continue;
            }
            let lambda = (hi - hj) / (gi - gj);
            let l = hi - lambda * gi;
            if lambda >= 0.0 && l >= 0.0 {
                candidates.push((l, lambda));
            }
        }
    }

    let mut best: Option<(f64, f64, f64)> = None;
    for (l, lambda) in candidates {
        // rounding in the pair intersection can leave tiny violations
        let gap = samples
            .iter()
            .map(|&(g, h)| h - (l + lambda * g))
            .fold(0.0, f64::max);
        let l = l + gap;
        let cost = l + lambda * mean_g;
        let better = match best {
            None => true,
            Some((bl, _, bc)) => {
                let tol = 1e-12 * bc.abs().max(1e-300);
                cost < bc - tol || ((cost - bc).abs() <= tol && l < bl)
            }
        };
        if better {
            best = Some((l, lambda, cost));
        }
    }
    let (l, lambda, _) = best.expect("at least one candidate");
    (l, lambda)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelaxedFit {
    pub l: f64,
    pub lambda: f64,
    /// `(‖∇F(w)‖, ‖∇²F(w)‖)` at each sampled point.
    pub samples: Vec<(f64, f64)>,
    /// Points where power iteration hit the iteration cap.
    pub nonconverged: usize,
}

/// Estimates relaxed-smoothness constants by sampling `points` locations in
/// `domain` and fitting the lower envelope of Hessian norm against gradient
/// norm.
pub fn fit_relaxed_smoothness(
    problem: &dyn Problem,
    rng: &mut SeededRng,
    domain: &SampleBox,
    points: usize,
) -> RelaxedFit {
    let mut samples = Vec::with_capacity(points);
    let mut nonconverged = 0;
    for _ in 0..points {
        let w: ParamVector = domain.sample(rng);
        let g = problem.full_gradient(w.as_slice()).norm();
        let h = hessian_norm(problem, w.as_slice(), rng);
        if !h.converged {
            nonconverged += 1;
        }
        samples.push((g, h.value));
    }
    let (l, lambda) = fit_envelope(&samples);
    RelaxedFit {
        l,
        lambda,
        samples,
        nonconverged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{log_spaced, make_exp_family, make_quadratic};

    #[test]
    fn envelope_on_collinear_points() {
        let pts = [(1.0, 3.0), (2.0, 5.0), (4.0, 9.0)];
        let (l, lambda) = fit_envelope(&pts);
        assert!((l - 1.0).abs() < 1e-12 && (lambda - 2.0).abs() < 1e-12);
    }

    #[test]
    fn envelope_prefers_flat_line_for_constant_curvature() {
        let (l, lambda) = fit_envelope(&[(0.5, 7.0), (3.0, 7.0), (9.0, 7.0)]);
        assert_eq!((l, lambda), (7.0, 0.0));
    }

    #[test]
    fn envelope_on_proportional_points() {
        let (l, lambda) = fit_envelope(&[(1.0, 2.0), (5.0, 10.0), (0.1, 0.2)]);
        assert!(l.abs() < 1e-12 && (lambda - 2.0).abs() < 1e-12);
    }

    #[test]
    fn envelope_covers_every_sample() {
        let mut rng = SeededRng::new(4);
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|_| (rng.uniform_in(0.0, 10.0), rng.uniform_in(0.0, 10.0)))
            .collect();
        let (l, lambda) = fit_envelope(&pts);
        for &(g, h) in &pts {
            assert!(h <= l + lambda * g + 1e-12);
        }
    }

    #[test]
    fn exp_family_fit() {
        for a in [0.5, 1.0, 2.0] {
            let p = make_exp_family(a).unwrap();
            let fit = fit_relaxed_smoothness(
                &p,
                &mut SeededRng::new(11),
                &SampleBox::around_origin(1, 2.0),
                40,
            );
            assert!((fit.lambda - a).abs() <= 0.01 * a, "a={a}: {fit:?}");
            assert!(fit.l <= 1e-3, "a={a}: {}", fit.l);
        }
    }

    #[test]
    fn quadratic_fit() {
        let q =
            make_quadratic(6, &log_spaced(6, 1.0, 20.0), 8, 1.0, &mut SeededRng::new(3)).unwrap();
        let fit = fit_relaxed_smoothness(
            &q,
            &mut SeededRng::new(5),
            &SampleBox::around_origin(6, 2.0),
            30,
        );
        assert!(fit.lambda <= 1e-6, "{fit:?}");
        assert!((fit.l - 20.0).abs() <= 0.2, "{}", fit.l);
        assert_eq!(fit.nonconverged, 0);
    }

    struct Flat;

    impl Problem for Flat {
        fn name(&self) -> &str {
            "flat"
        }
        fn n_samples(&self) -> usize {
            1
        }
        fn dim(&self) -> usize {
            2
        }
        fn sample_loss(&self, _i: usize, _w: &[f64]) -> f64 {
            3.0
        }
        fn add_sample_gradient(&self, _i: usize, _w: &[f64], _out: &mut [f64]) {}
    }

    #[test]
    fn constant_function_fit() {
        let fit = fit_relaxed_smoothness(
            &Flat,
            &mut SeededRng::new(0),
            &SampleBox::around_origin(2, 1.0),
            10,
        );
        assert_eq!((fit.l, fit.lambda), (0.0, 0.0));
        assert_eq!(fit.nonconverged, 0);
    }
}
