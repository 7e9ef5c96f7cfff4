//! Carcassonne rules engine and game-state encodings.
//!
//! Two encodings of the board live side by side: the sub-tile bit matrix in
//! [`board`] (3x3 cells per tile) and the typed multigraph in [`graph`],
//! which drives legality, feature completion and scoring. [`engine`] runs
//! turns on top of both and produces replayable [`record`]s.

pub mod action;
pub mod board;
pub mod candidate;
pub mod catalog;
pub mod checkpoint;
pub mod engine;
pub mod error;
pub mod gaze;
pub mod graph;
pub mod nodelink;
pub mod optim;
pub mod record;
pub mod rules;
pub mod seed;
pub mod unionfind;

pub use action::{Action, ActionMask, ActionSpace, MeepleOption};
pub use board::{BitMatrix, BoardState, GridPos, Meeple, PlacedTile, PlayerId};
pub use candidate::{CandidateBoard, CandidateInstance};
pub use catalog::{FeatureClass, Rotation, Slot, SubTileCell, TileCatalog, TileKind, TileSpec};
pub use checkpoint::Checkpoint;
pub use engine::{GameConfig, GameState, PlayerState, TurnEvent};
pub use error::*;
pub use graph::{EdgeKind, FeatureComponent, FeatureGraph, ScoreOutcome, ScoreStage, VertexId};
pub use optim::Adam;
pub use record::{replay, replay_states, GameRecord};
pub use rules::RuleTable;
pub use seed::mix_seed;
