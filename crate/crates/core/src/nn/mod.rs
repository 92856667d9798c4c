//! Small dense networks with hand-written gradients and the Adam optimizer.

mod adam;
pub mod checkpoint;
mod mlp;

pub use adam::{AdamState, LEARNING_RATE};
pub use mlp::{entropy, entropy_logit_grad, log_softmax, log_sum_exp, softmax, ForwardCache, MlpDims, MlpParams};

/// Hidden width used for policies and the latent encoder.
pub const HIDDEN_WIDTH: usize = 64;
