//! Message-passing network over the tripartite graph: forward pass,
//! reverse-mode gradients, the training loss, Adam, and a
//! finite-difference gradient checker.
//!
//! Everything here is bitwise deterministic: reductions run in fixed
//! ascending order, and the parallel path (see [`exec`]) only splits
//! work across rows that are each computed sequentially.

pub mod adam;
pub mod backward;
pub mod exec;
pub mod forward;
pub mod gradcheck;
pub mod loss;
pub mod params;

pub use adam::{adam_step, AdamState};
pub use backward::backward;
pub use forward::{
    aggregate_update, embed_inputs, forward, message_pep_pro, message_pep_psm, Adjacency,
    ForwardTrace, LayerTrace,
};
pub use gradcheck::{compare_grads, grad_check, relu_gap, GradCheckReport};
pub use loss::bce_loss;
pub use params::{init_params, LayerParams, ModelParams};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {location}")]
    NumericFault { location: String },
    #[error("loss mask selects no nodes")]
    EmptyMask,
    #[error("forward trace does not match this graph/model: {0}")]
    TraceMismatch(String),
}

/// Network hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    /// Message-passing layer count K.
    pub layers: usize,
    /// Hidden dimension h shared by all node states and messages.
    pub hidden: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub max_epochs: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            layers: 6,
            hidden: 100,
            learning_rate: 1e-3,
            seed: 1,
            max_epochs: 1000,
        }
    }
}
