use thiserror::Error;

use saag_core::{CheckpointError, EngineError, RecordError};

use crate::net::PolicyParams;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("action mask has no legal action")]
    EmptyMask,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training diverged at episode {episode} (non-finite loss)")]
    Diverged { episode: usize, last_good: Box<PolicyParams> },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}
