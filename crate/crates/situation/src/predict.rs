//! Ranked placement predictions for the next tile.

use serde::{Deserialize, Serialize};

use saag_core::{ActionSpace, CandidateBoard, GameState, Rotation, TileKind};

use crate::dataset::GraphExample;
use crate::error::SituationError;
use crate::gcn::{forward, GcnParams, PreparedGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub x: u16,
    pub y: u16,
    pub rotation: u8,
    pub probability: f64,
    /// Action index of the placement without a meeple.
    pub action: usize,
}

/// Candidate probabilities in candidate order, inference mode.
pub fn candidate_probabilities(params: &GcnParams, cb: &CandidateBoard) -> Result<Vec<f64>, SituationError> {
    let ex = GraphExample::from_board(cb, "", 0, 0, None)?;
    Ok(forward(params, &PreparedGraph::new(&ex), None)?.probs)
}

/// Top `k` placements, most likely first; ties go to the lower action index.
pub fn predict_board(params: &GcnParams, cb: &CandidateBoard, board_size: usize, k: usize) -> Result<Vec<Prediction>, SituationError> {
    let probs = candidate_probabilities(params, cb)?;
    let space = ActionSpace::new(board_size);
    let mut out: Vec<Prediction> = cb
        .candidates
        .iter()
        .zip(&probs)
        .map(|(c, &p)| Prediction {
            x: c.pos.x,
            y: c.pos.y,
            rotation: c.rotation.quarter_turns(),
            probability: p,
            action: space.placement_base(c.pos, c.rotation),
        })
        .collect();
    out.sort_by(|a, b| b.probability.total_cmp(&a.probability).then(a.action.cmp(&b.action)));
    out.truncate(k);
    Ok(out)
}

pub fn predict(params: &GcnParams, state: &GameState, tile: TileKind, k: usize) -> Result<Vec<Prediction>, SituationError> {
    let cb = CandidateBoard::from_state(state, tile)?;
    predict_board(params, &cb, state.config().board_size, k)
}

impl Prediction {
    pub fn rotation(&self) -> Rotation {
        Rotation::new(self.rotation).expect("stored rotation is valid")
    }
}
