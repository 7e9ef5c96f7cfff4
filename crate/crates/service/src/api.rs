//! Request and response bodies. Field names are part of the wire contract.

use serde::{Deserialize, Serialize};

use saag_core::{MeepleOption, TurnEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeatKind {
    Human,
    Ai,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AiKind {
    #[default]
    Greedy,
    Random,
    Policy,
}

/// Body of create-session. Missing fields take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub players: usize,
    pub seats: Vec<SeatKind>,
    pub board_size: usize,
    pub seed: Option<u64>,
    pub ai: AiKind,
    /// Policy checkpoint id; required when `ai` is `policy`.
    pub policy: Option<String>,
    /// Situation-model checkpoint id used for predictions.
    pub situation: Option<String>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            players: 2,
            seats: vec![SeatKind::Human, SeatKind::Ai],
            board_size: saag_core::GameConfig::default().board_size,
            seed: None,
            ai: AiKind::Greedy,
            policy: None,
            situation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqEvent {
    pub seq: u64,
    #[serde(flatten)]
    pub event: TurnEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeepleView {
    pub player: usize,
    pub slot: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedView {
    pub x: u16,
    pub y: u16,
    pub tile: String,
    pub rotation: u8,
    pub meeple: Option<MeepleView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementView {
    pub x: u16,
    pub y: u16,
    pub rotations: Vec<u8>,
}

/// Legality summary for the drawn tile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegalSummary {
    /// Popcount of the action mask.
    pub count: usize,
    pub placements: Vec<PlacementView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub session_id: String,
    pub seed: u64,
    pub board_size: usize,
    pub seats: Vec<SeatKind>,
    pub turn_index: usize,
    pub current_player: usize,
    pub drawn_tile: Option<String>,
    pub tiles_remaining: usize,
    pub finished: bool,
    pub scores: Vec<u32>,
    pub meeples: Vec<u32>,
    pub board: Vec<PlacedView>,
    pub legal: LegalSummary,
    pub last_events: Vec<SeqEvent>,
    pub next_seq: u64,
    pub policy: Option<String>,
    pub situation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionView {
    pub index: usize,
    pub x: u16,
    pub y: u16,
    pub rotation: u8,
    pub meeple: MeepleOption,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionsResponse {
    pub count: usize,
    pub actions: Vec<ActionView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActRequest {
    pub seat: usize,
    pub action: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActResponse {
    pub events: Vec<SeqEvent>,
    pub state: Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionsResponse {
    pub tile: String,
    pub situation: String,
    pub predictions: Vec<saag_situation::Prediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeSampleBody {
    pub t_ms: f64,
    pub x: f64,
    pub y: f64,
    #[serde(default = "yes")]
    pub valid: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GazeRequest {
    pub seat: usize,
    pub samples: Vec<GazeSampleBody>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeResponse {
    pub seat: usize,
    pub accepted: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapResponse {
    pub seat: usize,
    pub side: usize,
    pub total_dwell_ms: f64,
    pub off_board_ms: f64,
    pub mass: f64,
    /// Row-major `side × side` values.
    pub grid: Vec<f64>,
}

/// First line of a persisted session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub session_id: String,
    pub config: SessionConfig,
    pub events: Vec<SeqEvent>,
}

/// One applied action, human or AI, with the events it caused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seat: usize,
    pub action: usize,
    pub events: Vec<SeqEvent>,
}
