//! A small dense network engine with a hand-derived backward pass.
//!
//! Hidden blocks are `Dense → ReLU → BatchNorm → Dropout`, followed by a
//! dense layer to two logits. Everything is `f64` and row-major.

mod adam;
mod layers;
mod loss;
mod matrix;
mod mlp;

pub use adam::AdamState;
pub use layers::{xavier_init, xavier_limit, BatchNormLayer, DenseLayer, DropoutLayer};
pub use loss::{cross_entropy, cross_entropy_grad, softmax};
pub use matrix::Matrix;
pub use mlp::{HiddenBlock, MlpConfig, MlpModel, Mode, ParamSlot, OUTPUTS};

pub(crate) use loss::check_labels;
