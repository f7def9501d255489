//! Dense feed-forward networks in `f64` with exact reverse-mode gradients,
//! Adam, Polyak target updates and a binary checkpoint format.

mod adam;
pub mod checkpoint;
mod matrix;
mod mlp;

use thiserror::Error;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, Tensor};
pub use matrix::Matrix;
pub use mlp::{soft_update, Activation, Dense, ForwardCache, Gradients, Mlp};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
