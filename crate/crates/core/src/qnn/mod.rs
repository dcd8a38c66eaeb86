//! Hybrid classifier: a dense ELU encoder produces the `8m − 2` features
//! of a data-encoding circuit, stacked CV QNN layers act on the encoded
//! register, and the readout is either basis probabilities or per-mode
//! Pauli-X expectations.

pub mod circuit;
pub mod classical;
pub mod config;
pub mod loss;
pub mod model;
pub mod train;

pub use circuit::{
    encode, encoding_param_count, layer_param_count, qnn_layer, readout, squash, EncodingParams, QnnLayerParams,
    StagedParams, SQUASH_LIMIT,
};
pub use classical::{classical_forward, elu, Activation, ClassicalLayer};
pub use config::{HybridModelConfig, LossKind, Readout};
pub use loss::{finite_diff_grad, loss_mse, loss_xent, one_hot_target, pad_onehot, sgd_step, XENT_EPSILON};
pub use model::{argmax, model_forward, model_forward_traced, ModelParams};
pub use train::{
    batch_gradient, evaluate, train, train_with, BatchGradient, EpochRecord, Evaluation, TrainOptions,
    TrainingHistory,
};
