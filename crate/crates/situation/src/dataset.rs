//! Situation examples and the dataset file.
//!
//! The file is JSON lines. The first line is the header:
//!
//! ```text
//! {"format":"saag-dataset/1","catalog_hash":"…","feature_schema":["road",…],"count":71,"source":{…}}
//! ```
//!
//! followed by one example per line with `game`, `turn`, `tile`, `features`
//! (one integer row per vertex), `edges` (undirected vertex pairs), `groups`
//! (candidate placements with their vertex lists) and `label` (index into
//! `groups`).

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use saag_core::candidate::{FEATURE_SCHEMA, NODE_FEATURES};
use saag_core::record::replay_with;
use saag_core::{CandidateBoard, GameRecord, GridPos, Rotation, TileCatalog};

use crate::error::SituationError;

pub const FORMAT: &str = "saag-dataset/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub x: u16,
    pub y: u16,
    pub rotation: u8,
    pub vertices: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphExample {
    pub game: usize,
    pub turn: usize,
    pub tile: String,
    pub features: Vec<[f64; NODE_FEATURES]>,
    /// Undirected, deduplicated, no self loops, `a < b`.
    pub edges: Vec<(u32, u32)>,
    pub groups: Vec<Group>,
    pub label: usize,
}

impl GraphExample {
    pub fn node_count(&self) -> usize {
        self.features.len()
    }

    /// Converts a candidate board. `label` is the played (pos, rotation), if known.
    pub fn from_board(
        cb: &CandidateBoard,
        tile_id: &str,
        game: usize,
        turn: usize,
        label: Option<(GridPos, Rotation)>,
    ) -> Result<GraphExample, SituationError> {
        let label = match label {
            Some((pos, rot)) => cb.instance_at(pos, rot).ok_or(SituationError::MissingLabel { turn })?,
            None => 0,
        };
        let edges: BTreeSet<(u32, u32)> = cb.edges.iter().filter(|e| e.a != e.b).map(|e| (e.a.min(e.b), e.a.max(e.b))).collect();
        Ok(GraphExample {
            game,
            turn,
            tile: tile_id.to_string(),
            features: cb.node_features(),
            edges: edges.into_iter().collect(),
            groups: cb
                .candidates
                .iter()
                .map(|c| Group { x: c.pos.x, y: c.pos.y, rotation: c.rotation.quarter_turns(), vertices: c.vertices.clone() })
                .collect(),
            label,
        })
    }

    pub fn validate(&self) -> Result<(), String> {
        let n = self.node_count() as u32;
        if self.groups.is_empty() {
            return Err("no candidate groups".into());
        }
        if self.label >= self.groups.len() {
            return Err(format!("label {} out of {} groups", self.label, self.groups.len()));
        }
        if let Some(e) = self.edges.iter().find(|(a, b)| a >= b || *b >= n) {
            return Err(format!("bad edge {e:?}"));
        }
        let mut seen = BTreeSet::new();
        for g in &self.groups {
            if g.vertices.is_empty() || g.rotation > 3 {
                return Err("bad candidate group".into());
            }
            for &v in &g.vertices {
                if v >= n || !seen.insert(v) {
                    return Err(format!("group vertex {v} out of range or shared"));
                }
            }
        }
        if self.features.iter().flatten().any(|f| !(*f == 0.0 || *f == 1.0 || *f == -1.0)) {
            return Err("feature values must be -1, 0 or 1".into());
        }
        Ok(())
    }
}

/// One example per turn of every record: the pre-move board, the tile that
/// was played, and the candidate that was chosen.
pub fn generate_dataset(records: &[GameRecord], catalog: Arc<TileCatalog>) -> Result<Vec<GraphExample>, SituationError> {
    let per_game: Vec<Vec<GraphExample>> = records
        .par_iter()
        .enumerate()
        .map(|(game, rec)| {
            let mut out = Vec::with_capacity(rec.turns.len());
            let mut err = None;
            replay_with(rec, Arc::clone(&catalog), |state, turn| {
                if err.is_some() {
                    return;
                }
                let tile = state.drawn_tile().expect("pre-move state has a drawn tile");
                let label = turn.action().ok().map(|a| (a.pos, a.rotation));
                let built = CandidateBoard::from_state(state, tile)
                    .map_err(SituationError::from)
                    .and_then(|cb| GraphExample::from_board(&cb, &turn.tile, game, turn.turn, label));
                match built {
                    Ok(ex) => out.push(ex),
                    Err(e) => err = Some(e),
                }
            })?;
            match err {
                Some(e) => Err(e),
                None => Ok(out),
            }
        })
        .collect::<Result<_, SituationError>>()?;
    Ok(per_game.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub catalog_hash: String,
    pub feature_schema: Vec<String>,
    pub count: usize,
    /// Free-form provenance (generator config, seeds).
    #[serde(default)]
    pub source: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct ExampleLine {
    game: usize,
    turn: usize,
    tile: String,
    features: Vec<[i8; NODE_FEATURES]>,
    edges: Vec<(u32, u32)>,
    groups: Vec<Group>,
    label: usize,
}

pub fn write_dataset(examples: &[GraphExample], catalog_hash: &str, source: serde_json::Value) -> String {
    let header = DatasetHeader {
        format: FORMAT.into(),
        catalog_hash: catalog_hash.into(),
        feature_schema: FEATURE_SCHEMA.iter().map(|s| s.to_string()).collect(),
        count: examples.len(),
        source,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for ex in examples {
        let line = ExampleLine {
            game: ex.game,
            turn: ex.turn,
            tile: ex.tile.clone(),
            features: ex.features.iter().map(|row| row.map(|v| v as i8)).collect(),
            edges: ex.edges.clone(),
            groups: ex.groups.clone(),
            label: ex.label,
        };
        let _ = writeln!(out, "{}", serde_json::to_string(&line).expect("example serializes"));
    }
    out
}

pub fn parse_dataset(text: &str) -> Result<(DatasetHeader, Vec<GraphExample>), SituationError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or(SituationError::Parse { line: 1, msg: "missing header".into() })?;
    let header: DatasetHeader = serde_json::from_str(first).map_err(|e| SituationError::Parse { line: 1, msg: e.to_string() })?;
    if header.format != FORMAT {
        return Err(SituationError::Parse { line: 1, msg: format!("unsupported format '{}'", header.format) });
    }
    if header.feature_schema != FEATURE_SCHEMA {
        return Err(SituationError::Parse { line: 1, msg: "feature schema differs from this build".into() });
    }
    let mut examples = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        let ex: ExampleLine = serde_json::from_str(raw).map_err(|e| SituationError::Parse { line, msg: e.to_string() })?;
        let ex = GraphExample {
            game: ex.game,
            turn: ex.turn,
            tile: ex.tile,
            features: ex.features.iter().map(|row| row.map(f64::from)).collect(),
            edges: ex.edges,
            groups: ex.groups,
            label: ex.label,
        };
        ex.validate().map_err(|msg| SituationError::Parse { line, msg })?;
        examples.push(ex);
    }
    if examples.len() != header.count {
        return Err(SituationError::Parse { line: 0, msg: format!("header count {} but {} examples", header.count, examples.len()) });
    }
    Ok((header, examples))
}
