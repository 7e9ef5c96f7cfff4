use thiserror::Error;

use crate::board::GridPos;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("catalog line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("tile '{tile_id}': {msg}")]
    Validation { tile_id: String, msg: String },
    #[error("reading catalog: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoardError {
    #[error("board size {0} is too small (need at least 3)")]
    TooSmall(usize),
    #[error("position {0} is outside the board")]
    OutOfBounds(GridPos),
    #[error("cell {0} is already occupied")]
    Occupied(GridPos),
    #[error("cell {0} is not adjacent to any placed tile")]
    NotAdjacent(GridPos),
    #[error("side {side} at {pos} does not match its neighbour")]
    SideMismatch { pos: GridPos, side: crate::catalog::Slot },
    #[error("no tile at {0}")]
    Empty(GridPos),
    #[error("tile at {pos} has no {slot} slot")]
    NoSuchSlot { pos: GridPos, slot: crate::catalog::Slot },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("illegal placement at {0}")]
    IllegalPlacement(GridPos),
    #[error("midgame scoring of an incomplete {0}")]
    IncompleteFeature(crate::catalog::FeatureClass),
    #[error("vertex {0} does not exist")]
    NoVertex(u32),
    #[error("vertex {0} already holds a meeple")]
    MeepleTaken(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("invalid game config: {0}")]
    BadConfig(String),
    #[error("the deck is empty")]
    DeckEmpty,
    #[error("a tile is already drawn and not yet placed")]
    TilePending,
    #[error("no tile has been drawn")]
    NoDrawnTile,
    #[error("action {0} is not legal in this state")]
    IllegalAction(usize),
    #[error("action index {0} is outside the action space")]
    ActionOutOfRange(usize),
    #[error("action component out of range: {0}")]
    BadAction(String),
    #[error("game is not over")]
    GameNotOver,
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("record line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("replay diverged at turn {turn}: {msg}")]
    Divergence { turn: usize, msg: String },
    #[error("record catalog hash {found} does not match catalog {expected}")]
    CatalogMismatch { expected: String, found: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GazeError {
    #[error("gaze line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("gaze line {line}: timestamp {t} is earlier than the previous sample ({prev})")]
    NonMonotone { line: usize, t: f64, prev: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckpointError {
    #[error("bad checkpoint magic")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("truncated checkpoint")]
    Truncated,
    #[error("checkpoint header: {0}")]
    Header(String),
    #[error("checkpoint holds {found} weights, header declares {expected}")]
    Length { expected: usize, found: usize },
    #[error("non-finite weight at index {0}")]
    NonFinite(usize),
    #[error("checkpoint architecture hash {found} does not match {expected}")]
    Architecture { expected: String, found: String },
    #[error("checkpoint kind '{found}', expected '{expected}'")]
    Kind { expected: String, found: String },
    #[error("checkpoint io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NodeLinkError {
    #[error("graph line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CandidateError {
    #[error("tile '{0}' has no legal placement")]
    NoLegalPlacement(String),
}
