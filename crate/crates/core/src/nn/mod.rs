//! Dense feed-forward networks with exact backpropagation, inverted dropout,
//! mini-batch SGD and versioned weight files.

mod activation;
mod io;
mod loss;
mod matrix;
mod network;
mod train;

pub use activation::{activate, relu, sigmoid, Activation};
pub use io::{from_json, load_weights, save_weights, to_json, WEIGHTS_FORMAT_VERSION};
pub use loss::{bce, loss, mse, objective, rmse, LossKind, BCE_EPSILON};
pub use matrix::Matrix;
pub use network::{
    flatten_gradients, set_parameter, DenseLayer, DenseNet, Gradients, LayerSpec, LayerTrace, Mode,
    Trace,
};
pub use train::{evaluate_loss, train, train_validated, History, TrainConfig};
