use crate::error::{Error, Result};
use crate::problems::{KnownConstants, Problem};

/// Scalar `f(w) = exp(a·w)`: `(0, a)`-relaxed-smooth and not L-smooth on `R`.
#[derive(Clone, Debug)]
pub struct ExpFamily {
    a: f64,
}

pub fn make_exp_family(a: f64) -> Result<ExpFamily> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "exp family rate must be positive, got {a}"
        )));
    }
    Ok(ExpFamily { a })
}

impl ExpFamily {
    pub fn rate(&self) -> f64 {
        self.a
    }

    pub fn hessian(&self, w: f64) -> f64 {
        self.a * self.a * (self.a * w).exp()
    }
}

impl Problem for ExpFamily {
    fn name(&self) -> &str {
        "exp"
    }

    fn n_samples(&self) -> usize {
        1
    }

    fn dim(&self) -> usize {
        1
    }

    fn sample_loss(&self, _i: usize, w: &[f64]) -> f64 {
        (self.a * w[0]).exp()
    }

    fn add_sample_gradient(&self, _i: usize, w: &[f64], out: &mut [f64]) {
        out[0] += self.a * (self.a * w[0]).exp();
    }

    fn constants(&self) -> KnownConstants {
        KnownConstants {
            smoothness: None,
            smoothness_is_upper_bound: false,
            relaxed: Some((0.0, self.a)),
            f_star: None,
            w_star: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_origin() {
        let p = make_exp_family(1.0).unwrap();
        assert_eq!(p.loss(&[0.0]), 1.0);
        assert_eq!(p.full_gradient(&[0.0]).as_slice(), &[1.0]);
        assert_eq!(p.hessian(0.0), 1.0);
    }

    #[test]
    fn hessian_to_gradient_ratio_is_rate() {
        let p = make_exp_family(1.0).unwrap();
        for w in [-3.0, -0.5, 0.0, 1.7, 4.0] {
            let g = p.full_gradient(&[w]).as_slice()[0];
            assert!((p.hessian(w) / g - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_formula() {
        let p = make_exp_family(2.0).unwrap();
        let g = p.full_gradient(&[0.5]).as_slice()[0];
        assert!((g - 2.0 * std::f64::consts::E).abs() < 1e-14);
        assert!((g - 5.43656).abs() < 1e-5);
    }

    #[test]
    fn rejects_nonpositive_rate() {
        assert!(make_exp_family(0.0).is_err());
        assert!(make_exp_family(-1.0).is_err());
    }
}
