//! From-scratch deep Q-learning: a fully connected value network with
//! hand-rolled backpropagation, Huber loss, Adam, a FIFO replay buffer,
//! epsilon-greedy exploration, and the learning-phase training loop.

mod network;
mod optim;
mod persist;
mod replay;
mod train;

pub use network::{huber_loss, Gradients, QNetwork, HIDDEN_WIDTH, HUBER_DELTA, WEIGHT_LAYERS};
pub use optim::{AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use persist::PolicyFile;
pub use replay::{ReplayBuffer, Transition};
pub use train::{
    epsilon_greedy, greedy_action, td_target, train, training_env_factory, DeploymentRanges,
    TrainConfig, TrainResult,
};

use thiserror::Error;

use crate::env::EnvError;
use crate::scenario::ScenarioError;

#[derive(Debug, Error)]
pub enum DqnError {
    #[error("input length {got} does not match network input dimension {expected}")]
    InputDimMismatch { expected: usize, got: usize },
    #[error("action index {index} out of range for {actions} actions")]
    ActionIndexOutOfRange { index: usize, actions: usize },
    #[error("network needs at least an input and an output layer")]
    TooFewLayers,
    #[error("layer sizes must all be positive")]
    ZeroLayerSize,
    #[error("parameter vector length {got} does not match the layer layout ({expected})")]
    ParamCountMismatch { expected: usize, got: usize },
    #[error("non-finite parameter at flat index {0}")]
    NonFiniteParam(usize),
    #[error("gradient length {got} does not match parameter count {expected}")]
    GradientShapeMismatch { expected: usize, got: usize },
    #[error("empty Q-vector")]
    EmptyQVector,
    #[error("invalid training config: {field}: {message}")]
    InvalidTrainConfig { field: &'static str, message: String },
    #[error("weights file I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("weights file format error: {0}")]
    Format(#[from] serde_json::Error),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}
