//! Minimal deterministic neural-network kernel.
//!
//! Every layer is a pair of free functions: a forward pass and a backward
//! pass that accumulates parameter gradients into [`LayerParams`] and returns
//! the gradient with respect to the layer input. There is no autodiff graph;
//! callers keep whatever forward activations the backward pass needs.

mod adam;
mod fdcheck;
mod layers;
mod loss;
mod mlp;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use fdcheck::{finite_difference_check, relative_error, FdReport, FD_STEP};
pub use layers::{
    conv2d, conv2d_backward, conv2d_param_backward, dense, dense_backward, gradient_reversal,
    gradient_reversal_backward, maxpool2, maxpool2_backward, relu, relu_backward, tanh,
    tanh_backward, Activation, LayerParams,
};
pub use loss::{softmax, softmax_cross_entropy};
pub use mlp::{Mlp, MlpCache};
pub use tensor::Tensor;

pub(crate) use tensor::ensure_finite;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error("{op}: shape mismatch: expected {expected}, got {got}")]
    Shape { op: &'static str, expected: String, got: String },
    #[error("{op}: non-finite value at index {index}")]
    NonFinite { op: &'static str, index: usize },
    #[error("{op}: {msg}")]
    Invalid { op: &'static str, msg: String },
}

impl NumError {
    pub(crate) fn shape(op: &'static str, expected: impl Into<String>, got: impl Into<String>) -> Self {
        NumError::Shape { op, expected: expected.into(), got: got.into() }
    }

    pub(crate) fn invalid(op: &'static str, msg: impl Into<String>) -> Self {
        NumError::Invalid { op, msg: msg.into() }
    }
}
