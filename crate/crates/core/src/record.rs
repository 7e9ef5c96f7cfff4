//! Replayable game records.
//!
//! Newline-delimited JSON. The first line is the header, then one line per
//! turn, then an optional final line once the game has been scored:
//!
//! ```text
//! {"record":"header","format":"saag-record/1","catalog_hash":"…","seed":7,"config":{…}}
//! {"record":"turn","turn":0,"player":0,"tile":"V","x":20,"y":19,"rotation":1,"meeple":"none","discarded":[],"deltas":[0,0]}
//! {"record":"final","scores":[31,27],"endgame_deltas":[9,4],"discarded":[]}
//! ```
//!
//! Field names are frozen; `tests/golden` holds a reference file.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::action::{Action, MeepleOption};
use crate::board::{GridPos, PlayerId};
use crate::catalog::{Rotation, TileCatalog};
use crate::engine::{GameConfig, GameState};
use crate::error::{EngineError, RecordError};

pub const FORMAT: &str = "saag-record/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub format: String,
    pub catalog_hash: String,
    pub seed: u64,
    pub config: GameConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: usize,
    pub player: PlayerId,
    pub tile: String,
    pub x: u16,
    pub y: u16,
    pub rotation: u8,
    pub meeple: MeepleOption,
    /// Unplaceable tiles discarded before this turn's draw.
    pub discarded: Vec<String>,
    /// Score change of every player over the turn.
    pub deltas: Vec<u32>,
}

impl TurnRecord {
    pub fn action(&self) -> Result<Action, String> {
        Ok(Action {
            pos: GridPos { x: self.x, y: self.y },
            rotation: Rotation::new(self.rotation).ok_or_else(|| format!("rotation {} out of range", self.rotation))?,
            meeple: self.meeple,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalRecord {
    pub scores: Vec<u32>,
    pub endgame_deltas: Vec<u32>,
    pub discarded: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Line {
    Header(RecordHeader),
    Turn(TurnRecord),
    Final(FinalRecord),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameRecord {
    pub header: RecordHeader,
    pub turns: Vec<TurnRecord>,
    pub final_record: Option<FinalRecord>,
}

impl GameRecord {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut push = |line: &Line| {
            out.push_str(&serde_json::to_string(line).expect("record lines serialize"));
            out.push('\n');
        };
        push(&Line::Header(self.header.clone()));
        for t in &self.turns {
            push(&Line::Turn(t.clone()));
        }
        if let Some(f) = &self.final_record {
            push(&Line::Final(f.clone()));
        }
        out
    }

    pub fn parse(text: &str) -> Result<GameRecord, RecordError> {
        let mut header = None;
        let mut turns = Vec::new();
        let mut final_record = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let perr = |msg: String| RecordError::Parse { line, msg };
            let parsed: Line = serde_json::from_str(raw).map_err(|e| perr(e.to_string()))?;
            if final_record.is_some() {
                return Err(perr("content after the final line".into()));
            }
            match parsed {
                Line::Header(h) if header.is_none() => {
                    if h.format != FORMAT {
                        return Err(perr(format!("unsupported format '{}'", h.format)));
                    }
                    header = Some(h);
                }
                Line::Header(_) => return Err(perr("duplicate header".into())),
                _ if header.is_none() => return Err(perr("first line must be the header".into())),
                Line::Turn(t) => turns.push(t),
                Line::Final(f) => final_record = Some(f),
            }
        }
        let header = header.ok_or(RecordError::Parse { line: 0, msg: "empty record".into() })?;
        Ok(GameRecord { header, turns, final_record })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<GameRecord, RecordError> {
        let text = std::fs::read_to_string(path).map_err(|e| RecordError::Parse { line: 0, msg: e.to_string() })?;
        GameRecord::parse(&text)
    }
}

/// Replays a record, calling `visit` on every pre-move state (tile drawn,
/// not yet placed) before the recorded action is applied.
pub fn replay_with<F>(record: &GameRecord, catalog: Arc<TileCatalog>, mut visit: F) -> Result<GameState, RecordError>
where
    F: FnMut(&GameState, &TurnRecord),
{
    if record.header.catalog_hash != catalog.hash() {
        return Err(RecordError::CatalogMismatch {
            expected: catalog.hash().to_string(),
            found: record.header.catalog_hash.clone(),
        });
    }
    let mut state = GameState::new(catalog, record.header.config.clone(), record.header.seed)?;
    for (i, turn) in record.turns.iter().enumerate() {
        let div = |msg: String| RecordError::Divergence { turn: i, msg };
        if turn.turn != i {
            return Err(div(format!("turn counter {} out of sequence", turn.turn)));
        }
        let discarded_before = state.discarded().len();
        match state.draw() {
            Ok(_) => {}
            Err(EngineError::DeckEmpty) => return Err(div("deck exhausted before this turn".into())),
            Err(e) => return Err(e.into()),
        }
        let kind = state.drawn_tile().expect("drawn");
        let drawn_id = &state.catalog().spec(kind).tile_id;
        if *drawn_id != turn.tile {
            return Err(div(format!("drew {drawn_id}, record has {}", turn.tile)));
        }
        let discarded: Vec<&str> = state.discarded()[discarded_before..]
            .iter()
            .map(|k| state.catalog().spec(*k).tile_id.as_str())
            .collect();
        if discarded != turn.discarded.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(div(format!("discards {discarded:?} differ from record {:?}", turn.discarded)));
        }
        if turn.player != state.current_player() {
            return Err(div(format!("record player {} but player {} is to move", turn.player, state.current_player())));
        }
        let action = turn.action().map_err(div)?;
        let index = state.action_space().encode(action).map_err(|e| div(e.to_string()))?;
        visit(&state, turn);
        let before = state.scores();
        match state.apply(index) {
            Ok(_) => {}
            Err(EngineError::IllegalAction(_)) => return Err(div(format!("illegal action {action}"))),
            Err(e) => return Err(div(e.to_string())),
        }
        let deltas: Vec<u32> = state.scores().iter().zip(&before).map(|(a, b)| a - b).collect();
        if deltas != turn.deltas {
            return Err(div(format!("score deltas {deltas:?} differ from record {:?}", turn.deltas)));
        }
    }
    if let Some(fin) = &record.final_record {
        let n = record.turns.len();
        let div = |msg: String| RecordError::Divergence { turn: n, msg };
        match state.draw() {
            Err(EngineError::DeckEmpty) => {}
            Ok(_) => return Err(div("record ends but the deck still has placeable tiles".into())),
            Err(e) => return Err(e.into()),
        }
        let (scores, _) = state.finalize()?;
        if scores != fin.scores {
            return Err(div(format!("final scores {scores:?} differ from record {:?}", fin.scores)));
        }
    }
    Ok(state)
}

pub fn replay(record: &GameRecord, catalog: Arc<TileCatalog>) -> Result<GameState, RecordError> {
    replay_with(record, catalog, |_, _| {})
}

/// Every pre-move state of a record, in turn order.
pub fn replay_states(record: &GameRecord, catalog: Arc<TileCatalog>) -> Result<Vec<GameState>, RecordError> {
    let mut states = Vec::with_capacity(record.turns.len());
    replay_with(record, catalog, |s, _| states.push(s.clone()))?;
    Ok(states)
}
