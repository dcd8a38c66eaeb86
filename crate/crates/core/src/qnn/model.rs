use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::State;

use super::circuit::{encode, layer_param_count, qnn_layer, readout, EncodingParams, QnnLayerParams, StagedParams};
use super::classical::{classical_forward, Activation, ClassicalLayer};
use super::config::HybridModelConfig;

/// Half-width of the uniform classical weight initialization.
pub const WEIGHT_INIT_SCALE: f64 = 0.05;
/// Standard deviation of initial squeezing, displacement and Kerr values.
pub const MAGNITUDE_INIT_STD: f64 = 0.1;

/// All trainable parameters: the classical encoder followed by the QNN
/// layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub classical: Vec<ClassicalLayer>,
    pub layers: Vec<QnnLayerParams>,
}

impl ModelParams {
    /// Classical weights uniform in `[−0.05, 0.05]` with zero bias; layer
    /// phases uniform in `[0, 2π)`, magnitudes `N(0, 0.1)`.
    pub fn init<R: Rng>(config: &HybridModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let classical = config
            .encoder_widths
            .windows(2)
            .map(|w| ClassicalLayer::random(w[0], w[1], WEIGHT_INIT_SCALE, Activation::Elu, rng))
            .collect();
        let normal = Normal::new(0.0, MAGNITUDE_INIT_STD).expect("valid deviation");
        let mask = QnnLayerParams::phase_mask(config.modes);
        let layers = (0..config.layers)
            .map(|_| {
                let values = mask
                    .iter()
                    .map(|&phase| {
                        if phase {
                            rng.random::<f64>() * TAU
                        } else {
                            normal.sample(rng)
                        }
                    })
                    .collect();
                QnnLayerParams::new(values, config.modes)
            })
            .collect::<Result<_>>()?;
        Ok(ModelParams { classical, layers })
    }

    pub fn classical_len(&self) -> usize {
        self.classical.iter().map(ClassicalLayer::param_count).sum()
    }

    pub fn param_count(&self) -> usize {
        self.classical_len() + self.layers.iter().map(|l| l.values().len()).sum::<usize>()
    }

    /// Per classical layer: weights row-major, then bias; then every QNN
    /// layer's values in layout order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.classical {
            out.extend(layer.weights.iter());
            out.extend(layer.bias.iter());
        }
        for layer in &self.layers {
            out.extend_from_slice(layer.values());
        }
        out
    }

    /// Inverse of [`ModelParams::flatten`] for the shapes `config` implies.
    pub fn partition(config: &HybridModelConfig, flat: &[f64]) -> Result<Self> {
        let expected = expected_len(config);
        if flat.len() != expected {
            return Err(Error::LengthMismatch {
                what: "flat model parameters",
                expected,
                found: flat.len(),
            });
        }
        let mut rest = flat;
        let mut take = |n: usize| {
            let (head, tail) = rest.split_at(n);
            rest = tail;
            head.to_vec()
        };
        let mut classical = Vec::with_capacity(config.encoder_widths.len() - 1);
        for w in config.encoder_widths.windows(2) {
            let weights = ndarray::Array2::from_shape_vec((w[1], w[0]), take(w[0] * w[1])).expect("sized");
            let bias = ndarray::Array1::from(take(w[1]));
            classical.push(ClassicalLayer::new(weights, bias, Activation::Elu)?);
        }
        let layers = (0..config.layers)
            .map(|_| QnnLayerParams::new(take(layer_param_count(config.modes)), config.modes))
            .collect::<Result<_>>()?;
        Ok(ModelParams { classical, layers })
    }

    /// Shapes agree with `config`.
    pub fn check(&self, config: &HybridModelConfig) -> Result<()> {
        let widths: Vec<usize> = self
            .classical
            .first()
            .map(|l| l.input_dim())
            .into_iter()
            .chain(self.classical.iter().map(ClassicalLayer::output_dim))
            .collect();
        if widths != config.encoder_widths {
            return Err(Error::InvalidConfig(format!(
                "encoder widths {widths:?} do not match configured {:?}",
                config.encoder_widths
            )));
        }
        if self.layers.len() != config.layers || self.layers.iter().any(|l| l.modes() != config.modes) {
            return Err(Error::InvalidConfig("QNN layers do not match the configuration".into()));
        }
        Ok(())
    }
}

fn expected_len(config: &HybridModelConfig) -> usize {
    let classical: usize = config.encoder_widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    classical + config.layers * layer_param_count(config.modes)
}

/// Readout plus the norms seen after encoding and after each layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub output: Vec<f64>,
    pub norms: Vec<f64>,
}

pub fn model_forward_traced(config: &HybridModelConfig, params: &ModelParams, image: &[f64]) -> Result<ForwardTrace> {
    let cutoff = config.cutoff_dim()?;
    let features = classical_forward(&params.classical, image)?;
    let mut state: State = encode(&EncodingParams::new(features, config.modes)?, cutoff)?;
    let mut norms = Vec::with_capacity(params.layers.len() + 1);
    norms.push(state.norm());
    for layer in &params.layers {
        state = qnn_layer(layer, &state)?;
        norms.push(state.norm());
    }
    Ok(ForwardTrace {
        output: readout(&state, config.measurement)?,
        norms,
    })
}

/// Classical encoder, encoding circuit, QNN layers, then the configured
/// readout.
pub fn model_forward(config: &HybridModelConfig, params: &ModelParams, image: &[f64]) -> Result<Vec<f64>> {
    Ok(model_forward_traced(config, params, image)?.output)
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}
