//! Situation model: candidate-board datasets from game records and a
//! two-layer GCN that scores each legal placement of the next tile.

pub mod dataset;
pub mod error;
pub mod gcn;
pub mod predict;
pub mod train;

pub use dataset::{generate_dataset, parse_dataset, write_dataset, DatasetHeader, GraphExample, Group};
pub use error::SituationError;
pub use gcn::{forward, GcnArch, GcnParams, PreparedGraph};
pub use predict::{candidate_probabilities, predict, predict_board, Prediction};
pub use train::{evaluate, split_by_game, train_situation_model, EpochMetrics, GcnConfig, GcnTrainOutput};
