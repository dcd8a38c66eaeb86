use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::Cutoff;

use super::circuit::encoding_param_count;

/// Largest register handled by the dense simulator.
pub const MAX_REGISTER: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// Basis probabilities over all `n^m` register states.
    Probability,
    /// Per-mode Pauli-X expectation values; needs cutoff 2.
    ExpectationX,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[serde(rename = "xent")]
    CategoricalCrossentropy,
    Mse,
}

/// Everything needed to build, initialize and train a hybrid model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridModelConfig {
    pub modes: usize,
    pub cutoff: usize,
    pub layers: usize,
    /// Input width, hidden widths, then `8m − 2`.
    pub encoder_widths: Vec<usize>,
    pub measurement: Readout,
    pub loss: LossKind,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub samples: usize,
    pub classes: usize,
    pub batch_size: usize,
    /// Step for the central differences over circuit parameters.
    pub fd_delta: f64,
}

impl HybridModelConfig {
    pub const DEFAULT_HIDDEN: usize = 32;
    pub const DEFAULT_BATCH: usize = 16;
    pub const DEFAULT_FD_DELTA: f64 = 1e-5;

    /// Probability readout, crossentropy, 784 inputs and one hidden layer of
    /// width 32.
    pub fn new(modes: usize, cutoff: usize, layers: usize, classes: usize) -> Self {
        HybridModelConfig {
            modes,
            cutoff,
            layers,
            encoder_widths: vec![784, Self::DEFAULT_HIDDEN, encoding_param_count(modes)],
            measurement: Readout::Probability,
            loss: LossKind::CategoricalCrossentropy,
            lr: 0.02,
            epochs: 10,
            seed: 42,
            samples: 600,
            classes,
            batch_size: Self::DEFAULT_BATCH,
            fd_delta: Self::DEFAULT_FD_DELTA,
        }
    }

    /// Replaces the encoder with `input → hidden... → 8m − 2`.
    pub fn with_encoder(mut self, input: usize, hidden: &[usize]) -> Self {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(input);
        widths.extend_from_slice(hidden);
        widths.push(encoding_param_count(self.modes));
        self.encoder_widths = widths;
        self
    }

    pub fn cutoff_dim(&self) -> Result<Cutoff> {
        Cutoff::new(self.cutoff)
    }

    pub fn input_dim(&self) -> usize {
        self.encoder_widths.first().copied().unwrap_or(0)
    }

    /// `n^m` for probability readout, `m` for expectation readout.
    pub fn output_size(&self) -> usize {
        match self.measurement {
            Readout::Probability => self.register_len().unwrap_or(usize::MAX),
            Readout::ExpectationX => self.modes,
        }
    }

    fn register_len(&self) -> Option<usize> {
        let mut len: usize = 1;
        for _ in 0..self.modes {
            len = len.checked_mul(self.cutoff)?;
        }
        Some(len)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.modes < 2 {
            return bad(format!(
                "at least 2 qumodes are needed for the encoding interferometer, got {}",
                self.modes
            ));
        }
        Cutoff::new(self.cutoff)?;
        match self.register_len() {
            Some(len) if len <= MAX_REGISTER => {}
            _ => {
                return bad(format!(
                    "register {}^{} exceeds {MAX_REGISTER} amplitudes",
                    self.cutoff, self.modes
                ))
            }
        }
        if self.encoder_widths.len() < 2 || self.encoder_widths.contains(&0) {
            return bad("encoder needs at least input and output widths, all positive".into());
        }
        let last = *self.encoder_widths.last().expect("checked length");
        if last != encoding_param_count(self.modes) {
            return bad(format!(
                "encoder must end in {} features for {} modes, got {last}",
                encoding_param_count(self.modes),
                self.modes
            ));
        }
        if self.measurement == Readout::ExpectationX && self.cutoff != 2 {
            return bad("Pauli-X expectation readout needs cutoff 2".into());
        }
        if !(1..=10).contains(&self.classes) {
            return bad(format!("classes must be in 1..=10, got {}", self.classes));
        }
        if self.output_size() < self.classes {
            return bad(format!(
                "output size {} cannot hold {} classes",
                self.output_size(),
                self.classes
            ));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return bad(format!("learning rate must be finite and non-negative, got {}", self.lr));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        if !(self.fd_delta.is_finite() && self.fd_delta > 0.0) {
            return bad(format!("finite-difference step must be positive, got {}", self.fd_delta));
        }
        Ok(())
    }
}
