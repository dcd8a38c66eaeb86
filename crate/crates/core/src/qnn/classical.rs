//! Dense `φ(Wx + b)` layers with reverse-mode gradients.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn elu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

fn elu_slope(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        x.exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Elu,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Elu => elu(x),
            Activation::Identity => x,
        }
    }

    fn slope(self, x: f64) -> f64 {
        match self {
            Activation::Elu => elu_slope(x),
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalLayer {
    /// `out × in`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

/// Weight and bias gradients for one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LayerGrad {
    pub fn zeros_like(layer: &ClassicalLayer) -> Self {
        LayerGrad {
            weights: Array2::zeros(layer.weights.raw_dim()),
            bias: Array1::zeros(layer.bias.raw_dim()),
        }
    }

    pub fn add_assign(&mut self, other: &LayerGrad) {
        self.weights += &other.weights;
        self.bias += &other.bias;
    }
}

impl ClassicalLayer {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>, activation: Activation) -> Result<Self> {
        if weights.nrows() != bias.len() {
            return Err(Error::LengthMismatch {
                what: "layer bias",
                expected: weights.nrows(),
                found: bias.len(),
            });
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("classical layer parameters"));
        }
        Ok(ClassicalLayer {
            weights,
            bias,
            activation,
        })
    }

    /// Weights uniform in `[−scale, scale]`, zero bias.
    pub fn random<R: Rng>(input: usize, output: usize, scale: f64, activation: Activation, rng: &mut R) -> Self {
        let weights = Array2::from_shape_fn((output, input), |_| rng.random_range(-scale..=scale));
        ClassicalLayer {
            weights,
            bias: Array1::zeros(output),
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn pre_activation(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(self.weights.dot(&x) + &self.bias)
    }

    pub fn forward(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        Ok(self.pre_activation(x)?.mapv(|v| self.activation.apply(v)))
    }
}

/// Activations kept for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    inputs: Vec<Array1<f64>>,
    pre: Vec<Array1<f64>>,
    output: Array1<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array1<f64> {
        &self.output
    }
}

pub fn classical_forward(layers: &[ClassicalLayer], image: &[f64]) -> Result<Vec<f64>> {
    let mut x = Array1::from(image.to_vec());
    for layer in layers {
        x = layer.forward(x.view())?;
    }
    Ok(x.to_vec())
}

pub fn classical_forward_cached(layers: &[ClassicalLayer], image: &[f64]) -> Result<ForwardCache> {
    let mut inputs = Vec::with_capacity(layers.len());
    let mut pre = Vec::with_capacity(layers.len());
    let mut x = Array1::from(image.to_vec());
    for layer in layers {
        let z = layer.pre_activation(x.view())?;
        let next = z.mapv(|v| layer.activation.apply(v));
        inputs.push(x);
        pre.push(z);
        x = next;
    }
    Ok(ForwardCache {
        inputs,
        pre,
        output: x,
    })
}

/// Parameter gradients given `∂L/∂output`.
pub fn classical_backward(layers: &[ClassicalLayer], cache: &ForwardCache, grad_output: &[f64]) -> Result<Vec<LayerGrad>> {
    if grad_output.len() != cache.output.len() {
        return Err(Error::DimensionMismatch {
            expected: cache.output.len(),
            found: grad_output.len(),
        });
    }
    let mut grads = Vec::with_capacity(layers.len());
    let mut upstream = Array1::from(grad_output.to_vec());
    for (k, layer) in layers.iter().enumerate().rev() {
        let delta: Array1<f64> = upstream
            .iter()
            .zip(&cache.pre[k])
            .map(|(g, &z)| g * layer.activation.slope(z))
            .collect();
        let input = &cache.inputs[k];
        let weights = Array2::from_shape_fn(layer.weights.raw_dim(), |(i, j)| delta[i] * input[j]);
        upstream = layer.weights.t().dot(&delta);
        grads.push(LayerGrad {
            weights,
            bias: delta,
        });
    }
    grads.reverse();
    Ok(grads)
}
