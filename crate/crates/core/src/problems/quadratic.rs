use crate::error::{Error, Result};
use crate::linalg::ParamVector;
use crate::problems::{KnownConstants, Problem};
use crate::rng::SeededRng;

/// `F(w) = (1/n) Σ ½ (w − c_i)ᵀ A (w − c_i)` with diagonal `A`.
///
/// The minimizer is the mean center `c̄` and
/// `F(w) = ½ (w − c̄)ᵀ A (w − c̄) + F*`, where `F*` is the mean of
/// `½ (c_i − c̄)ᵀ A (c_i − c̄)`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    spectrum: Vec<f64>,
    centers: Vec<f64>,
    n: usize,
    mean_center: Vec<f64>,
    f_star: f64,
}

impl Quadratic {
    /// Builds the problem from explicit centers (`n × d`, row-major).
    pub fn from_centers(spectrum: Vec<f64>, centers: Vec<f64>) -> Result<Self> {
        let d = spectrum.len();
        if d == 0 {
            return Err(Error::InvalidArgument("spectrum must be nonempty".into()));
        }
        if let Some(bad) = spectrum.iter().find(|&&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "spectrum entries must be positive and finite, got {bad}"
            )));
        }
        if centers.is_empty() || !centers.len().is_multiple_of(d) {
            return Err(Error::InvalidArgument(format!(
                "centers length {} is not a positive multiple of d={d}",
                centers.len()
            )));
        }
        let n = centers.len() / d;
        let mut mean_center = vec![0.0; d];
        for row in centers.chunks(d) {
            for (m, c) in mean_center.iter_mut().zip(row) {
                *m += c;
            }
        }
        for m in &mut mean_center {
            *m /= n as f64;
        }
        let f_star = centers
            .chunks(d)
            .map(|row| half_quad_form(&spectrum, row, &mean_center))
            .sum::<f64>()
            / n as f64;
        Ok(Self {
            spectrum,
            centers,
            n,
            mean_center,
            f_star,
        })
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn center(&self, i: usize) -> &[f64] {
        let d = self.spectrum.len();
        &self.centers[i * d..(i + 1) * d]
    }

    pub fn mean_center(&self) -> &[f64] {
        &self.mean_center
    }
}

fn half_quad_form(a: &[f64], w: &[f64], c: &[f64]) -> f64 {
    0.5 * a
        .iter()
        .zip(w.iter().zip(c))
        .map(|(ak, (wk, ck))| ak * (wk - ck) * (wk - ck))
        .sum::<f64>()
}

/// Diagonal quadratic with `n` centers drawn uniformly from
/// `[−center_spread, center_spread]^d`.
pub fn make_quadratic(
    d: usize,
    spectrum: &[f64],
    n: usize,
    center_spread: f64,
    rng: &mut SeededRng,
) -> Result<Quadratic> {
    if spectrum.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: spectrum.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if !(center_spread >= 0.0 && center_spread.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "center_spread must be finite and nonnegative, got {center_spread}"
        )));
    }
    let centers = (0..n * d)
        .map(|_| rng.uniform_in(-center_spread, center_spread))
        .collect();
    Quadratic::from_centers(spectrum.to_vec(), centers)
}

/// `d` values log-spaced from `lo` to `hi` inclusive.
pub fn log_spaced(d: usize, lo: f64, hi: f64) -> Vec<f64> {
    match d {
        0 => vec![],
        1 => vec![hi],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..d)
                .map(|k| {
                    if k == d - 1 {
                        hi
                    } else if k == 0 {
                        lo
                    } else {
                        (a + (b - a) * k as f64 / (d - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

impl Problem for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn n_samples(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.spectrum.len()
    }

    fn sample_loss(&self, i: usize, w: &[f64]) -> f64 {
        half_quad_form(&self.spectrum, w, self.center(i))
    }

    fn add_sample_gradient(&self, i: usize, w: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o += self.spectrum[k] * (w[k] - self.center(i)[k]);
        }
    }

    fn loss(&self, w: &[f64]) -> f64 {
        half_quad_form(&self.spectrum, w, &self.mean_center) + self.f_star
    }

    fn full_gradient(&self, w: &[f64]) -> ParamVector {
        ParamVector::new(
            self.spectrum
                .iter()
                .zip(w.iter().zip(&self.mean_center))
                .map(|(a, (wk, ck))| a * (wk - ck))
                .collect(),
        )
    }

    fn constants(&self) -> KnownConstants {
        let l = self.spectrum.iter().copied().fold(0.0, f64::max);
        KnownConstants {
            smoothness: Some(l),
            smoothness_is_upper_bound: false,
            relaxed: Some((l, 0.0)),
            f_star: Some(self.f_star),
            w_star: Some(ParamVector::new(self.mean_center.clone())),
        }
    }
}
