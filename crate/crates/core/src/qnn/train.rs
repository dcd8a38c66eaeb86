//! Minibatch SGD over the hybrid model.
//!
//! Gradients combine three pieces:
//! - per-sample central differences over the `8m − 2` encoding features,
//!   re-running the encoding only from the stage that feature drives;
//! - reverse-mode backprop of those feature gradients through the
//!   classical encoder;
//! - batch-level central differences over every QNN layer parameter,
//!   replaying from the cached state that enters the perturbed layer.
//!
//! Every parallel map collects in input order and is summed sequentially,
//! so results do not depend on the worker count.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::fock::{Cutoff, State};

use super::circuit::{perturbed_gate, readout, CompiledCircuit, EncodingParams, StagedParams};
use super::classical::{classical_backward, classical_forward_cached, LayerGrad};
use super::config::HybridModelConfig;
use super::loss::one_hot_target;
use super::model::{argmax, model_forward_traced, ModelParams};

/// States whose norm leaves `[1 − 1e−3, 1 + 1e−6]` are counted.
pub const NORM_BAND: (f64, f64) = (1.0 - 1e-3, 1.0 + 1e-6);
/// A state norm below this aborts training.
pub const NORM_ABORT: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub min_norm: f64,
    pub max_norm: f64,
    pub norm_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub config: HybridModelConfig,
    /// Full-pass metrics of the initial parameters (epoch 0).
    pub initial: EpochRecord,
    /// Full-pass metrics after each epoch, starting at epoch 1.
    pub epochs: Vec<EpochRecord>,
    pub final_params: ModelParams,
}

impl TrainingHistory {
    pub fn final_accuracy(&self) -> f64 {
        self.epochs.last().unwrap_or(&self.initial).accuracy
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub predictions: Vec<usize>,
    pub min_norm: f64,
    pub max_norm: f64,
    pub norm_violations: usize,
}

impl Evaluation {
    fn record(&self, epoch: usize) -> EpochRecord {
        EpochRecord {
            epoch,
            loss: self.loss,
            accuracy: self.accuracy,
            min_norm: self.min_norm,
            max_norm: self.max_norm,
            norm_violations: self.norm_violations,
        }
    }
}

fn check_dataset(config: &HybridModelConfig, data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InvalidConfig("dataset is empty".into()));
    }
    if data.input_dim() != config.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: config.input_dim(),
            found: data.input_dim(),
        });
    }
    if let Some(&l) = data.labels().iter().find(|&&l| usize::from(l) >= config.classes) {
        return Err(Error::InvalidConfig(format!(
            "label {l} outside the {} configured classes",
            config.classes
        )));
    }
    Ok(())
}

fn target(config: &HybridModelConfig, label: u8) -> Result<Vec<f64>> {
    one_hot_target(usize::from(label), config.classes, config.output_size())
}

/// Mean loss, accuracy and norm statistics over the whole dataset.
pub fn evaluate(config: &HybridModelConfig, params: &ModelParams, data: &Dataset) -> Result<Evaluation> {
    config.validate()?;
    params.check(config)?;
    check_dataset(config, data)?;
    let per_sample: Vec<(f64, usize, Vec<f64>)> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let trace = model_forward_traced(config, params, &data.images()[i])?;
            let loss = config.loss.evaluate(&trace.output, &target(config, data.labels()[i])?)?;
            Ok((loss, argmax(&trace.output), trace.norms))
        })
        .collect::<Result<_>>()?;
    let mut loss = 0.0;
    let mut correct = 0usize;
    let mut min_norm = f64::INFINITY;
    let mut max_norm = f64::NEG_INFINITY;
    let mut norm_violations = 0;
    let mut predictions = Vec::with_capacity(data.len());
    for ((l, pred, norms), &label) in per_sample.into_iter().zip(data.labels()) {
        loss += l;
        correct += usize::from(pred == usize::from(label));
        predictions.push(pred);
        for n in norms {
            min_norm = min_norm.min(n);
            max_norm = max_norm.max(n);
            norm_violations += usize::from(!(NORM_BAND.0..=NORM_BAND.1).contains(&n));
        }
    }
    Ok(Evaluation {
        loss: loss / data.len() as f64,
        accuracy: correct as f64 / data.len() as f64,
        predictions,
        min_norm,
        max_norm,
        norm_violations,
    })
}

/// Mean batch loss and its gradient in [`ModelParams::flatten`] layout.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchGradient {
    pub loss: f64,
    pub grad: Vec<f64>,
}

struct SampleWork {
    loss: f64,
    /// State entering each QNN layer.
    layer_inputs: Vec<State>,
    classical: Vec<LayerGrad>,
}

struct Engine<'a> {
    config: &'a HybridModelConfig,
    params: &'a ModelParams,
    cutoff: Cutoff,
    layers: Vec<CompiledCircuit>,
}

impl<'a> Engine<'a> {
    fn new(config: &'a HybridModelConfig, params: &'a ModelParams) -> Result<Self> {
        let cutoff = config.cutoff_dim()?;
        let layers = params
            .layers
            .iter()
            .map(|l| CompiledCircuit::compile(l, cutoff))
            .collect::<Result<_>>()?;
        Ok(Engine {
            config,
            params,
            cutoff,
            layers,
        })
    }

    /// Runs layers `from..` and scores the readout.
    fn finish(&self, mut state: State, from: usize, target: &[f64]) -> Result<f64> {
        for layer in &self.layers[from..] {
            layer.run(&mut state)?;
        }
        self.config.loss.evaluate(&readout(&state, self.config.measurement)?, target)
    }

    fn sample(&self, image: &[f64], label: u8, scale: f64) -> Result<SampleWork> {
        let target = target(self.config, label)?;
        let cache = classical_forward_cached(&self.params.classical, image)?;
        let features = EncodingParams::new(cache.output().to_vec(), self.config.modes)?;
        let encoder = CompiledCircuit::compile(&features, self.cutoff)?;
        let stage_inputs = encoder.run_recording(State::vacuum(self.config.modes, self.cutoff)?)?;

        let mut layer_inputs = Vec::with_capacity(self.layers.len());
        let mut state = stage_inputs.last().expect("final state").clone();
        for layer in &self.layers {
            layer_inputs.push(state.clone());
            layer.run(&mut state)?;
        }
        check_norm(&state)?;
        let loss = self
            .config
            .loss
            .evaluate(&readout(&state, self.config.measurement)?, &target)?;

        let delta = self.config.fd_delta;
        let mut feature_grad = Vec::with_capacity(features.values().len());
        for (i, &v) in features.values().iter().enumerate() {
            let probe = |value: f64| -> Result<f64> {
                let (s, g, op) = perturbed_gate(&features, i, value, self.cutoff)?;
                let mut st = stage_inputs[s].clone();
                encoder.run_from(&mut st, s, Some((s, g, &op)))?;
                self.finish(st, 0, &target)
            };
            let up = probe(v + delta)?;
            let down = probe(v - delta)?;
            feature_grad.push(scale * (up - down) / (2.0 * delta));
        }
        let classical = classical_backward(&self.params.classical, &cache, &feature_grad)?;
        Ok(SampleWork {
            loss,
            layer_inputs,
            classical,
        })
    }

    fn batch(&self, data: &Dataset, batch: &[usize]) -> Result<BatchGradient> {
        let scale = 1.0 / batch.len() as f64;
        let work: Vec<SampleWork> = batch
            .par_iter()
            .map(|&i| self.sample(&data.images()[i], data.labels()[i], scale))
            .collect::<Result<_>>()?;

        let mut loss = 0.0;
        let mut classical: Vec<LayerGrad> = self.params.classical.iter().map(LayerGrad::zeros_like).collect();
        for w in &work {
            loss += w.loss;
            for (acc, g) in classical.iter_mut().zip(&w.classical) {
                acc.add_assign(g);
            }
        }

        let targets: Vec<Vec<f64>> = batch
            .iter()
            .map(|&i| target(self.config, data.labels()[i]))
            .collect::<Result<_>>()?;
        let tasks: Vec<(usize, usize)> = self
            .params
            .layers
            .iter()
            .enumerate()
            .flat_map(|(l, p)| (0..p.values().len()).map(move |i| (l, i)))
            .collect();
        let delta = self.config.fd_delta;
        let layer_grad: Vec<f64> = tasks
            .par_iter()
            .map(|&(l, i)| {
                let p = &self.params.layers[l];
                let v = p.values()[i];
                let batch_loss = |value: f64| -> Result<f64> {
                    let (s, g, op) = perturbed_gate(p, i, value, self.cutoff)?;
                    let mut total = 0.0;
                    for (w, t) in work.iter().zip(&targets) {
                        let mut st = w.layer_inputs[l].clone();
                        self.layers[l].run_from(&mut st, 0, Some((s, g, &op)))?;
                        total += self.finish(st, l + 1, t)?;
                    }
                    Ok(total * scale)
                };
                Ok((batch_loss(v + delta)? - batch_loss(v - delta)?) / (2.0 * delta))
            })
            .collect::<Result<_>>()?;

        let mut grad = Vec::with_capacity(self.params.param_count());
        for g in &classical {
            grad.extend(g.weights.iter());
            grad.extend(g.bias.iter());
        }
        grad.extend(layer_grad);
        Ok(BatchGradient {
            loss: loss * scale,
            grad,
        })
    }
}

fn check_norm(state: &State) -> Result<()> {
    let n = state.norm();
    if n.is_nan() || n < NORM_ABORT {
        return Err(Error::NonFinite("state norm collapsed below 0.5"));
    }
    Ok(())
}

/// Gradient of the mean loss over `batch` (indices into `data`).
pub fn batch_gradient(config: &HybridModelConfig, params: &ModelParams, data: &Dataset, batch: &[usize]) -> Result<BatchGradient> {
    config.validate()?;
    params.check(config)?;
    check_dataset(config, data)?;
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    if let Some(&i) = batch.iter().find(|&&i| i >= data.len()) {
        return Err(Error::OutOfRange {
            index: i,
            bound: data.len(),
        });
    }
    Engine::new(config, params)?.batch(data, batch)
}

fn diverged(epoch: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite(what) => Error::Divergence {
            epoch,
            reason: what.to_string(),
        },
        other => other,
    }
}

fn check_record(record: &EpochRecord) -> Result<()> {
    if !record.loss.is_finite() {
        return Err(Error::Divergence {
            epoch: record.epoch,
            reason: format!("loss is {}", record.loss),
        });
    }
    if record.min_norm < NORM_ABORT {
        return Err(Error::Divergence {
            epoch: record.epoch,
            reason: format!("state norm fell to {}", record.min_norm),
        });
    }
    Ok(())
}

/// Optional knobs for [`train_with`].
#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Start from these parameters instead of the seeded initialization.
    pub initial: Option<ModelParams>,
}

pub fn train(config: &HybridModelConfig, data: &Dataset) -> Result<TrainingHistory> {
    train_with(config, data, &TrainOptions::default(), |_| {})
}

/// Runs `config.epochs` epochs of shuffled minibatch SGD, calling
/// `on_epoch` after each full-pass evaluation (including epoch 0).
pub fn train_with<F>(config: &HybridModelConfig, data: &Dataset, options: &TrainOptions, on_epoch: F) -> Result<TrainingHistory>
where
    F: FnMut(&EpochRecord) + Send,
{
    config.validate()?;
    check_dataset(config, data)?;
    match options.workers {
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?
            .install(|| run(config, data, options, on_epoch)),
        None => run(config, data, options, on_epoch),
    }
}

fn run<F>(config: &HybridModelConfig, data: &Dataset, options: &TrainOptions, mut on_epoch: F) -> Result<TrainingHistory>
where
    F: FnMut(&EpochRecord),
{
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial_params = ModelParams::init(config, &mut rng)?;
    let mut params = match &options.initial {
        Some(p) => {
            p.check(config)?;
            p.clone()
        }
        None => initial_params,
    };

    let initial = evaluate(config, &params, data).map_err(diverged(0))?.record(0);
    check_record(&initial)?;
    on_epoch(&initial);

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let g = batch_gradient(config, &params, data, batch).map_err(diverged(epoch))?;
            let flat = params.flatten();
            let next: Vec<f64> = flat.iter().zip(&g.grad).map(|(p, g)| p - config.lr * g).collect();
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    reason: "parameters became non-finite".into(),
                });
            }
            params = ModelParams::partition(config, &next)?;
        }
        let record = evaluate(config, &params, data).map_err(diverged(epoch))?.record(epoch);
        check_record(&record)?;
        on_epoch(&record);
        epochs.push(record);
    }
    Ok(TrainingHistory {
        config: config.clone(),
        initial,
        epochs,
        final_params: params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qnn::model::model_forward;

    fn toy() -> (HybridModelConfig, Dataset) {
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for k in 0..8 {
            let class = k % 2;
            let jitter = 0.05 * (k / 2) as f64;
            let img = if class == 0 {
                vec![0.9 - jitter, 0.8, 0.1 + jitter, 0.0]
            } else {
                vec![0.1 + jitter, 0.0, 0.9 - jitter, 0.8]
            };
            images.push(img);
            labels.push(class as u8);
        }
        let mut config = HybridModelConfig::new(2, 2, 1, 2).with_encoder(4, &[6]);
        config.batch_size = 4;
        (config, Dataset::new(images, labels).unwrap())
    }

    #[test]
    fn zero_epochs_keeps_initial_params() {
        let (mut config, data) = toy();
        config.epochs = 0;
        let h = train(&config, &data).unwrap();
        assert!(h.epochs.is_empty());
        let expected = ModelParams::init(&config, &mut ChaCha8Rng::seed_from_u64(config.seed)).unwrap();
        assert_eq!(h.final_params, expected);
    }

    #[test]
    fn gradient_matches_plain_differences() {
        let (config, data) = toy();
        let params = ModelParams::init(&config, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let batch = [0, 3, 5];
        let g = batch_gradient(&config, &params, &data, &batch).unwrap();
        let flat = params.flatten();
        let loss_at = |v: &[f64]| -> f64 {
            let p = ModelParams::partition(&config, v).unwrap();
            batch
                .iter()
                .map(|&i| {
                    let out = model_forward(&config, &p, &data.images()[i]).unwrap();
                    config.loss.evaluate(&out, &target(&config, data.labels()[i]).unwrap()).unwrap()
                })
                .sum::<f64>()
                / batch.len() as f64
        };
        assert!((g.loss - loss_at(&flat)).abs() < 1e-12);
        let h = 1e-5;
        let mut probe = flat.clone();
        let mut err2 = 0.0;
        let mut ref2 = 0.0;
        for i in 0..flat.len() {
            probe[i] = flat[i] + h;
            let up = loss_at(&probe);
            probe[i] = flat[i] - h;
            let down = loss_at(&probe);
            probe[i] = flat[i];
            let oracle = (up - down) / (2.0 * h);
            err2 += (g.grad[i] - oracle).powi(2);
            ref2 += oracle.powi(2);
        }
        assert!((err2 / ref2).sqrt() < 1e-6, "{}", (err2 / ref2).sqrt());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let (mut config, data) = toy();
        config.epochs = 2;
        let one = train_with(&config, &data, &TrainOptions { workers: Some(1), initial: None }, |_| {}).unwrap();
        let four = train_with(&config, &data, &TrainOptions { workers: Some(4), initial: None }, |_| {}).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn divergence_is_reported() {
        let (mut config, data) = toy();
        config.epochs = 3;
        config.lr = 1e308;
        assert!(matches!(train(&config, &data), Err(Error::Divergence { .. })));
    }

    #[test]
    fn rejects_bad_datasets() {
        let (config, _) = toy();
        let wide = Dataset::new(vec![vec![0.0; 5]], vec![0]).unwrap();
        assert!(train(&config, &wide).is_err());
        let label = Dataset::new(vec![vec![0.0; 4]], vec![3]).unwrap();
        assert!(train(&config, &label).is_err());
    }
}
