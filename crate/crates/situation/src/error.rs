use thiserror::Error;

use saag_core::{CandidateError, CheckpointError, RecordError};

#[derive(Debug, Error)]
pub enum SituationError {
    #[error(transparent)]
    Candidate(#[from] CandidateError),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("dataset line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite loss in epoch {0}")]
    NonFinite(usize),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("recorded placement at turn {turn} is not among the candidates")]
    MissingLabel { turn: usize },
}
