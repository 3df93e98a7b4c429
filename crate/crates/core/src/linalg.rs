//! Dense vector arithmetic over `f64`.

use std::ops::Range;

use crate::error::{Error, Result};

/// Model parameter `w ∈ R^d`, optionally segmented into layers.
///
/// Layer bounds, when present, are sorted, disjoint and cover `[0, d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    coords: Vec<f64>,
    layers: Option<Vec<Range<usize>>>,
}

impl ParamVector {
    pub fn new(coords: Vec<f64>) -> Self {
        Self {
            coords,
            layers: None,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![0.0; dim])
    }

    /// Attaches a layer segmentation after checking that it partitions `[0, d)`.
    pub fn with_layers(mut self, layers: Vec<Range<usize>>) -> Result<Self> {
        validate_layers(&layers, self.coords.len())?;
        self.layers = Some(layers);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    pub fn layer_bounds(&self) -> Option<&[Range<usize>]> {
        self.layers.as_deref()
    }

    pub fn norm(&self) -> f64 {
        euclidean_norm(&self.coords)
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64> {
        check_dims(self.len(), other.len())?;
        Ok(dot(&self.coords, &other.coords))
    }

    /// `self ← alpha·x + self`.
    pub fn axpy_in_place(&mut self, alpha: f64, x: &ParamVector) -> Result<()> {
        check_dims(self.len(), x.len())?;
        for (yi, xi) in self.coords.iter_mut().zip(&x.coords) {
            *yi += alpha * xi;
        }
        Ok(())
    }

    pub fn scale_in_place(&mut self, alpha: f64) {
        for v in &mut self.coords {
            *v *= alpha;
        }
    }

    pub fn scaled(&self, alpha: f64) -> ParamVector {
        let mut out = self.clone();
        out.scale_in_place(alpha);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|v| v.is_finite())
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &ParamVector) -> Result<f64> {
        check_dims(self.len(), other.len())?;
        let diff: Vec<f64> = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a - b)
            .collect();
        Ok(euclidean_norm(&diff))
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(coords: Vec<f64>) -> Self {
        Self::new(coords)
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn validate_layers(layers: &[Range<usize>], dim: usize) -> Result<()> {
    let mut next = 0;
    for (k, r) in layers.iter().enumerate() {
        if r.start != next {
            return Err(Error::InvalidLayerBounds(format!(
                "layer {k} starts at {} but previous layer ended at {next}",
                r.start
            )));
        }
        if r.end <= r.start {
            return Err(Error::InvalidLayerBounds(format!("layer {k} is empty")));
        }
        next = r.end;
    }
    if next != dim {
        return Err(Error::InvalidLayerBounds(format!(
            "layers cover [0, {next}) but dimension is {dim}"
        )));
    }
    Ok(())
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `sqrt(Σ v_i²)`. Falls back to a rescaled sum when the plain sum of
/// squares would overflow or underflow.
pub fn euclidean_norm(v: &[f64]) -> f64 {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max == 0.0 || !max.is_finite() {
        return max;
    }
    if (1e-150..=1e150).contains(&max) {
        return v.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    let ss: f64 = v.iter().map(|x| (x / max) * (x / max)).sum();
    max * ss.sqrt()
}

/// Returns `alpha·x + y`; the inputs are left unchanged. The result carries
/// `y`'s layer segmentation.
pub fn axpy(alpha: f64, x: &ParamVector, y: &ParamVector) -> Result<ParamVector> {
    let mut out = y.clone();
    out.axpy_in_place(alpha, x)?;
    Ok(out)
}
