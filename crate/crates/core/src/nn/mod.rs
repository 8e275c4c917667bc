//! Dense MLP / LSTM classifiers: forward passes, backpropagation, Adam
//! training with early stopping, gradient checking and model files.

mod gradcheck;
mod lstm;
mod matrix;
mod mlp;
mod model;
mod model_file;
mod network;
mod train;

pub use gradcheck::{analytic_gradient, grad_check, numeric_gradient, FD_STEP, GRAD_FLOOR};
pub use lstm::{LstmCell, LstmParams, StepCache, GATES};
pub use matrix::{add_outer, Matrix};
pub use mlp::{DenseLayer, MlpParams};
pub use model::{Architecture, Model, ModelKind};
pub use model_file::{
    blob_path, load_dense, manifest_for, read_manifest, save_dense, DenseManifest, ModelMeta, TensorEntry, TensorRole,
    DENSE_FORMAT,
};
pub use network::{argmax, cross_entropy, evaluate, log_sum_exp, softmax, Activation, Network, SampleSet, TensorRef};
pub use train::{train, Adam, EpochStats, History, TrainConfig};
