//! Observation tensors for the policy.

use saag_core::{GameState, PlayerId, Rotation, SubTileCell, TileKind};

pub const CHANNELS: usize = 5;
pub const SCALARS: usize = 5;
pub const TILE_FEATURES: usize = 9 * CHANNELS;
/// Scores are divided by this and clamped to 1.
pub const SCORE_SCALE: f64 = 200.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Grid side, `3W`.
    pub side: usize,
    /// `side × side × CHANNELS`, row-major with channels innermost:
    /// cloister, road, city, shield, meeple.
    pub grid: Vec<f64>,
    /// Own score, best opponent score, tiles remaining, own meeples,
    /// best opponent meeples; each in [0, 1].
    pub scalars: [f64; SCALARS],
    /// The drawn tile at rotation 0, `3 × 3 × CHANNELS`.
    pub current_tile: [f64; TILE_FEATURES],
}

impl Observation {
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.side, self.side, CHANNELS)
    }

    pub fn at(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.grid[(row * self.side + col) * CHANNELS + channel]
    }

    /// Scalars followed by the current tile, as fed to the dense head.
    pub fn extras(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(SCALARS + TILE_FEATURES);
        v.extend_from_slice(&self.scalars);
        v.extend_from_slice(&self.current_tile);
        v
    }
}

fn write_cell(out: &mut [f64], cell: SubTileCell) {
    out[0] = f64::from(u8::from(cell.bits & SubTileCell::CLOISTER != 0));
    out[1] = f64::from(u8::from(cell.bits & SubTileCell::ROAD != 0));
    out[2] = f64::from(u8::from(cell.bits & SubTileCell::CITY != 0));
    out[3] = f64::from(u8::from(cell.shield));
}

/// Encodes `state` from `player`'s seat. Meeples read +1 for the viewer and
/// -1 for everyone else.
pub fn observe(state: &GameState, player: PlayerId) -> Observation {
    let board = state.board();
    let m = board.bit_matrix();
    let side = m.rows();
    let mut grid = vec![0.0; side * side * CHANNELS];
    for (i, cell) in m.cells().iter().enumerate() {
        write_cell(&mut grid[i * CHANNELS..(i + 1) * CHANNELS], *cell);
    }
    for (pos, meeple) in board.meeples() {
        let (r, c) = meeple.slot.subcell();
        let (row, col) = (pos.y as usize * 3 + r, pos.x as usize * 3 + c);
        grid[(row * side + col) * CHANNELS + 4] = if meeple.player == player { 1.0 } else { -1.0 };
    }

    let players = state.players();
    let cfg = state.config();
    let per = f64::from(cfg.meeples_per_player.max(1));
    let score = |s: u32| (f64::from(s) / SCORE_SCALE).min(1.0);
    let others = players.iter().enumerate().filter(|(p, _)| *p != player).map(|(_, s)| s);
    let opp_score = others.clone().map(|s| s.score).max().unwrap_or(0);
    let opp_meeples = others.map(|s| s.meeples).max().unwrap_or(0);
    let deck = (state.catalog().total_count() - 1).max(1) as f64;
    let scalars = [
        score(players[player].score),
        score(opp_score),
        state.tiles_remaining() as f64 / deck,
        f64::from(players[player].meeples) / per,
        f64::from(opp_meeples) / per,
    ];

    let mut current_tile = [0.0; TILE_FEATURES];
    if let Some(kind) = state.drawn_tile() {
        current_tile = tile_features(state, kind);
    }
    Observation { side, grid, scalars, current_tile }
}

pub fn tile_features(state: &GameState, kind: TileKind) -> [f64; TILE_FEATURES] {
    let mut out = [0.0; TILE_FEATURES];
    let g = state.catalog().spec(kind).subgrid(Rotation::default());
    for r in 0..3 {
        for c in 0..3 {
            let i = (r * 3 + c) * CHANNELS;
            write_cell(&mut out[i..i + CHANNELS], g[r][c]);
        }
    }
    out
}
