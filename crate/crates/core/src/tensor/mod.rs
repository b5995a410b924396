//! Dense arrays and the differentiable layer kernels.

mod activation;
mod array;
mod conv;
mod dense;
mod pool;
mod softmax;

pub use activation::{relu, relu_backward, relu_backward_slice, relu_matrix, relu_matrix_backward, relu_slice};
pub use array::{Matrix, Tensor3};
pub use conv::{conv1d_backward, conv1d_forward, ConvLayerParams, KERNEL_WIDTH, STRIDE};
pub use dense::{dense_backward, dense_forward, DenseLayerParams};
pub use pool::{maxpool_backward, maxpool_forward, PoolMemo, PoolSpec, POOL_SIZE, POOL_STRIDE};
pub use softmax::{softmax, softmax_in_place, softmax_rows};
