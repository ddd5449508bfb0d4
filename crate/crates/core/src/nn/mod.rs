//! Minimal reverse-mode layer kit: exactly the operations the shift
//! regressor needs, each with a hand-derived backward pass.

mod gru;
mod init;
mod ops;
mod optim;
mod tensor;

pub use gru::{gru_backward, gru_sequence, GruContext, GruGrads, GruWeights};
pub use init::he_init;
pub use ops::{
    conv2d, conv2d_backward, linear, linear_backward, matmul_acc, matmul_bt_acc, mse_loss,
    mse_loss_backward, relu, relu_backward, ConvContext, ConvSpec,
};
pub use optim::{adam_step, clip_grad_norm, AdamState, DEFAULT_CLIP, DEFAULT_LR};
pub use tensor::{Parameter, Tensor};
