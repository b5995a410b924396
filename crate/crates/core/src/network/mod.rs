//! The ten-layer skill classifier: architecture, initialization, dropout, loss,
//! forward/backward orchestration and checkpoints.

mod arch;
mod checkpoint;
mod dropout;
mod loss;
mod model;
mod params;

pub use arch::{
    ArchitectureSpec, LayerKind, CLASS_COUNT, CONV_CHANNELS, DEFAULT_HIDDEN_WIDTHS, INPUT_CHANNELS, LAYER_SEQUENCE,
};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use dropout::{DropoutMask, Mode};
pub use loss::{cross_entropy_loss, LossValue, LOG_CLAMP};
pub use model::{argmax, backward, forward, predict, ForwardCache, TrainingBatch};
pub use params::{init_params, ModelParams, Weights};
