//! Fully connected network with hand-written backpropagation.
//!
//! Parameters are laid out layer by layer: for each layer the weight matrix
//! `W` (`out × in`, row-major) followed by its bias `b` (`out`). Each `W`
//! and each `b` is its own segment in the layer bounds. A single output unit
//! is trained with binary cross-entropy on logits; `k ≥ 2` outputs with
//! softmax cross-entropy against integer labels `0..k`.

use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::ParamVector;
use crate::problems::logistic::softplus;
use crate::problems::{DatasetMatrix, Problem};
use crate::rng::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    /// Subgradient at 0 is taken as 0.
    Relu,
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Self::Tanh),
            "relu" => Ok(Self::Relu),
            other => Err(Error::InvalidArgument(format!(
                "unknown activation {other:?} (expected tanh or relu)"
            ))),
        }
    }
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Self::Tanh => z.tanh(),
            Self::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Self::Tanh => 1.0 - a * a,
            Self::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
struct LayerShape {
    fan_in: usize,
    fan_out: usize,
    weights: Range<usize>,
    bias: Range<usize>,
}

#[derive(Clone, Debug)]
pub struct Mlp {
    layout: Vec<usize>,
    activation: Activation,
    data: DatasetMatrix,
    layers: Vec<LayerShape>,
    dim: usize,
}

pub fn make_mlp(layout: &[usize], activation: Activation, data: DatasetMatrix) -> Result<Mlp> {
    if layout.len() < 2 {
        return Err(Error::InvalidArgument(
            "layout needs at least an input and an output width".into(),
        ));
    }
    if layout.contains(&0) {
        return Err(Error::InvalidArgument(
            "layer widths must be positive".into(),
        ));
    }
    if layout[0] != data.d() {
        return Err(Error::DimensionMismatch {
            expected: data.d(),
            got: layout[0],
        });
    }
    let classes = *layout.last().unwrap();
    for (row, &label) in data.labels().iter().enumerate() {
        let ok = if classes == 1 {
            label == 0.0 || label == 1.0
        } else {
            label.fract() == 0.0 && label >= 0.0 && (label as usize) < classes
        };
        if !ok {
            return Err(Error::InvalidLabel {
                row: row + 1,
                label,
                reason: if classes == 1 {
                    "binary output expects labels 0 or 1"
                } else {
                    "softmax output expects integer labels below the output width"
                },
            });
        }
    }
    let mut layers = Vec::with_capacity(layout.len() - 1);
    let mut offset = 0;
    for pair in layout.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let weights = offset..offset + fan_in * fan_out;
        let bias = weights.end..weights.end + fan_out;
        offset = bias.end;
        layers.push(LayerShape {
            fan_in,
            fan_out,
            weights,
            bias,
        });
    }
    Ok(Mlp {
        layout: layout.to_vec(),
        activation,
        data,
        layers,
        dim: offset,
    })
}

struct Forward {
    /// Pre-activations per layer.
    z: Vec<Vec<f64>>,
    /// Activations per layer, `a[0]` is the input.
    a: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn layout(&self) -> &[usize] {
        &self.layout
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn forward(&self, x: &[f64], w: &[f64]) -> Forward {
        let last = self.layers.len() - 1;
        let mut z_all = Vec::with_capacity(self.layers.len());
        let mut a_all = Vec::with_capacity(self.layers.len() + 1);
        a_all.push(x.to_vec());
        for (l, shape) in self.layers.iter().enumerate() {
            let input = &a_all[l];
            let wm = &w[shape.weights.clone()];
            let b = &w[shape.bias.clone()];
            let z: Vec<f64> = (0..shape.fan_out)
                .map(|o| {
                    let row = &wm[o * shape.fan_in..(o + 1) * shape.fan_in];
                    b[o] + row.iter().zip(input).map(|(p, q)| p * q).sum::<f64>()
                })
                .collect();
            let a = if l == last {
                z.clone()
            } else {
                z.iter().map(|&v| self.activation.apply(v)).collect()
            };
            z_all.push(z);
            a_all.push(a);
        }
        Forward { z: z_all, a: a_all }
    }

    fn output_loss(&self, logits: &[f64], label: f64) -> f64 {
        if logits.len() == 1 {
            let y = 2.0 * label - 1.0;
            softplus(-y * logits[0])
        } else {
            log_sum_exp(logits) - logits[label as usize]
        }
    }

    /// `∂loss/∂logits`.
    fn output_delta(&self, logits: &[f64], label: f64) -> Vec<f64> {
        if logits.len() == 1 {
            vec![crate::problems::logistic::sigmoid(logits[0]) - label]
        } else {
            let lse = log_sum_exp(logits);
            logits
                .iter()
                .enumerate()
                .map(|(k, &z)| (z - lse).exp() - if k == label as usize { 1.0 } else { 0.0 })
                .collect()
        }
    }

    /// Whether a relu pre-activation of any sample changes sign between
    /// `w − eps·dir` and `w + eps·dir`, i.e. a kink lies inside the central
    /// difference stencil. Always `false` for tanh.
    pub fn kink_within(&self, w: &[f64], dir: &[f64], eps: f64) -> bool {
        if self.activation != Activation::Relu {
            return false;
        }
        let lo: Vec<f64> = w.iter().zip(dir).map(|(a, b)| a - eps * b).collect();
        let hi: Vec<f64> = w.iter().zip(dir).map(|(a, b)| a + eps * b).collect();
        let hidden = self.layers.len() - 1;
        (0..self.data.n()).any(|i| {
            let f_lo = self.forward(self.data.row(i), &lo);
            let f_hi = self.forward(self.data.row(i), &hi);
            let f_mid = self.forward(self.data.row(i), w);
            (0..hidden).any(|l| {
                f_lo.z[l]
                    .iter()
                    .zip(&f_hi.z[l])
                    .zip(&f_mid.z[l])
                    .any(|((a, b), c)| {
                        (a.signum() != b.signum()) || *a == 0.0 || *b == 0.0 || *c == 0.0
                    })
            })
        })
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

impl Problem for Mlp {
    fn name(&self) -> &str {
        "mlp"
    }

    fn n_samples(&self) -> usize {
        self.data.n()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn sample_loss(&self, i: usize, w: &[f64]) -> f64 {
        let f = self.forward(self.data.row(i), w);
        self.output_loss(f.a.last().unwrap(), self.data.label(i))
    }

    fn add_sample_gradient(&self, i: usize, w: &[f64], out: &mut [f64]) {
        let f = self.forward(self.data.row(i), w);
        let mut delta = self.output_delta(f.a.last().unwrap(), self.data.label(i));
        for (l, shape) in self.layers.iter().enumerate().rev() {
            let input = &f.a[l];
            for o in 0..shape.fan_out {
                let d = delta[o];
                out[shape.bias.start + o] += d;
                let base = shape.weights.start + o * shape.fan_in;
                for (k, x) in input.iter().enumerate() {
                    out[base + k] += d * x;
                }
            }
            if l == 0 {
                break;
            }
            let wm = &w[shape.weights.clone()];
            let prev_z = &f.z[l - 1];
            let prev_a = &f.a[l];
            delta = (0..shape.fan_in)
                .map(|k| {
                    let back: f64 = (0..shape.fan_out)
                        .map(|o| wm[o * shape.fan_in + k] * delta[o])
                        .sum();
                    back * self.activation.derivative(prev_z[k], prev_a[k])
                })
                .collect();
        }
    }

    fn layer_bounds(&self) -> Option<Vec<Range<usize>>> {
        Some(
            self.layers
                .iter()
                .flat_map(|s| [s.weights.clone(), s.bias.clone()])
                .collect(),
        )
    }

    fn twice_differentiable(&self) -> bool {
        self.activation == Activation::Tanh
    }

    /// Uniform in `[−s, s]` with `s = 1/sqrt(fan_in)` for weights and biases.
    fn initial_point(&self, rng: &mut SeededRng) -> ParamVector {
        let mut w = vec![0.0; self.dim];
        for shape in &self.layers {
            let s = 1.0 / (shape.fan_in as f64).sqrt();
            for v in &mut w[shape.weights.start..shape.bias.end] {
                *v = rng.uniform_in(-s, s);
            }
        }
        self.shape(ParamVector::new(w))
    }

    fn nonsmooth_between(&self, w: &[f64], dir: &[f64], eps: f64) -> bool {
        self.kink_within(w, dir, eps)
    }

    fn sample_correct(&self, i: usize, w: &[f64]) -> Option<bool> {
        let f = self.forward(self.data.row(i), w);
        let logits = f.a.last().unwrap();
        let label = self.data.label(i);
        Some(if logits.len() == 1 {
            (logits[0] > 0.0) == (label == 1.0)
        } else {
            let best = logits
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(k, _)| k)
                .unwrap();
            best == label as usize
        })
    }
}
