//! Adam updates and the mini-batch training loop.

mod adam;
mod train;

pub use adam::{adam_step, OptimizerConfig, ValidationSplit};
pub use train::{
    assemble_inputs, evaluate_crops, format_learning_curve, train, validation_split, write_learning_curve,
    EpochRecord, TrainOutcome, TrainState, LEARNING_CURVE_HEADER,
};
