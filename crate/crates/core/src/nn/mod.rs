//! Minimal neural-network kernel: tensors, the layers of the twin network,
//! Adam, finite-difference gradient checking and a checkpoint container.
//!
//! Layers are forward/backward pairs over owned [`Tensor`]s. A forward call
//! caches what its backward needs; backward accumulates into each
//! [`Param::grad`] and optionally returns the input gradient.

mod activation;
mod adam;
pub mod checkpoint;
mod conv;
mod dense;
mod dropout;
pub mod gradcheck;
mod norm;
mod scalar;
mod sequential;
mod tensor;

pub use activation::{elu, relu, Elu, Relu};
pub use adam::{adam_step, Adam, AdamConfig, AdamState};
pub use conv::Conv2d;
pub use dense::Dense;
pub use dropout::{dropout, Dropout};
pub use gradcheck::{gradient_check, relative_error, GradCheckReport, LinearHead, LossHead, SquaredNormHead, FD_STEP};
pub use norm::BatchNorm;
pub use scalar::{gemm, MatView, Scalar};
pub use sequential::{Flatten, Layer, LayerSpec, Sequential};
pub use tensor::{Param, Tensor};

/// Train mode uses batch statistics and samples dropout masks; infer mode is deterministic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}
