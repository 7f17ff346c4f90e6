//! Multi-task training: Bernoulli choice between caption–image and
//! caption–caption ranking steps, Adam updates, and early stopping on the
//! validation recall sum.

mod config;
mod cursor;
mod history;
mod scheduler;
mod step;
mod train;

pub use config::{EvalCadence, TrainConfig, DEFAULT_EVAL_INTERVAL};
pub use cursor::BatchCursor;
pub use history::{
    evaluate_stopping, EvalRecord, StepRecord, StopDecision, StopReason, TrainHistory,
};
pub use scheduler::{Task, TaskScheduler};
pub use step::{c2c_gradients, c2i_gradients};
pub use train::{train, train_with, TrainObserver, TrainOutcome};
