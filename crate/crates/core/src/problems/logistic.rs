use crate::error::{Error, Result};
use crate::linalg::{dot, euclidean_norm};
use crate::problems::{DatasetMatrix, KnownConstants, Problem};

/// L2-regularized logistic regression,
/// `f_i(w) = log(1 + exp(−y_i x_iᵀw)) + (l2/2)‖w‖²` with `y_i = 2·label − 1`.
#[derive(Clone, Debug)]
pub struct Logistic {
    data: DatasetMatrix,
    signs: Vec<f64>,
    l2: f64,
    smoothness_bound: f64,
}

pub fn make_logistic(data: DatasetMatrix, l2: f64) -> Result<Logistic> {
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "l2 must be finite and nonnegative, got {l2}"
        )));
    }
    let mut signs = Vec::with_capacity(data.n());
    for (row, &label) in data.labels().iter().enumerate() {
        let s = match label {
            0.0 => -1.0,
            1.0 => 1.0,
            _ => {
                return Err(Error::InvalidLabel {
                    row: row + 1,
                    label,
                    reason: "logistic labels must be 0 or 1",
                })
            }
        };
        signs.push(s);
    }
    let max_sq = (0..data.n())
        .map(|i| {
            let r = euclidean_norm(data.row(i));
            r * r
        })
        .fold(0.0, f64::max);
    Ok(Logistic {
        smoothness_bound: max_sq / 4.0 + l2,
        data,
        signs,
        l2,
    })
}

/// `log(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Logistic {
    pub fn data(&self) -> &DatasetMatrix {
        &self.data
    }

    fn penalty(&self, w: &[f64]) -> f64 {
        if self.l2 == 0.0 {
            0.0
        } else {
            0.5 * self.l2 * dot(w, w)
        }
    }
}

impl Problem for Logistic {
    fn name(&self) -> &str {
        "logistic"
    }

    fn n_samples(&self) -> usize {
        self.data.n()
    }

    fn dim(&self) -> usize {
        self.data.d()
    }

    fn sample_loss(&self, i: usize, w: &[f64]) -> f64 {
        let margin = self.signs[i] * dot(self.data.row(i), w);
        softplus(-margin) + self.penalty(w)
    }

    fn add_sample_gradient(&self, i: usize, w: &[f64], out: &mut [f64]) {
        let x = self.data.row(i);
        let y = self.signs[i];
        let coef = -y * sigmoid(-y * dot(x, w));
        for ((o, xk), wk) in out.iter_mut().zip(x).zip(w) {
            *o += coef * xk + self.l2 * wk;
        }
    }

    fn constants(&self) -> KnownConstants {
        KnownConstants {
            smoothness: Some(self.smoothness_bound),
            smoothness_is_upper_bound: true,
            relaxed: Some((self.smoothness_bound, 0.0)),
            f_star: None,
            w_star: None,
        }
    }

    fn sample_correct(&self, i: usize, w: &[f64]) -> Option<bool> {
        let score = dot(self.data.row(i), w);
        Some((score > 0.0) == (self.signs[i] > 0.0))
    }
}
