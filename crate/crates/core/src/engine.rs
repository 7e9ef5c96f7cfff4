//! Turn state machine: deck, placements, meeples and scoring.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{Action, ActionMask, ActionSpace, MeepleOption};
use crate::board::{BoardState, GridPos, Meeple, PlacedTile, PlayerId};
use crate::catalog::{FeatureClass, Rotation, Slot, TileCatalog, TileKind};
use crate::error::EngineError;
use crate::graph::{FeatureComponent, FeatureGraph, ScoreStage, VertexId};
use crate::record::{FinalRecord, GameRecord, RecordHeader, TurnRecord};
use crate::rules::RuleTable;

pub const MAX_PLAYERS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub board_size: usize,
    pub players: usize,
    pub meeples_per_player: u32,
    pub rules: RuleTable,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            board_size: crate::board::DEFAULT_BOARD_SIZE,
            players: 2,
            meeples_per_player: 7,
            rules: RuleTable::default(),
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(1..=MAX_PLAYERS).contains(&self.players) {
            return Err(EngineError::BadConfig(format!("players must be 1..={MAX_PLAYERS}, got {}", self.players)));
        }
        if self.board_size < 3 || self.board_size > u16::MAX as usize {
            return Err(EngineError::BadConfig(format!("board size {} out of range", self.board_size)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerState {
    pub score: u32,
    pub meeples: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TurnEvent {
    Draw { player: PlayerId, tile: String },
    Discard { tile: String },
    PlaceTile { player: PlayerId, tile: String, x: u16, y: u16, rotation: u8 },
    PlaceMeeple { player: PlayerId, x: u16, y: u16, slot: Slot },
    FeatureCompleted { player: PlayerId, feature: FeatureClass, tiles: usize },
    Score { player: PlayerId, points: u32, feature: FeatureClass, stage: ScoreStage },
    MeepleReturn { player: PlayerId, x: u16, y: u16, slot: Slot },
    EndTurn { player: PlayerId },
}

#[derive(Debug, Clone)]
pub struct GameState {
    catalog: Arc<TileCatalog>,
    config: GameConfig,
    seed: u64,
    board: BoardState,
    graph: FeatureGraph,
    deck: Vec<TileKind>,
    next: usize,
    current: PlayerId,
    players: Vec<PlayerState>,
    drawn: Option<TileKind>,
    turn_index: usize,
    discarded: Vec<TileKind>,
    discarded_this_turn: Vec<TileKind>,
    history: Vec<TurnRecord>,
    final_record: Option<FinalRecord>,
}

impl GameState {
    /// Places the start tile and shuffles the deck from `seed`.
    pub fn new(catalog: Arc<TileCatalog>, config: GameConfig, seed: u64) -> Result<GameState, EngineError> {
        config.validate()?;
        let board = BoardState::new(config.board_size, Arc::clone(&catalog))?;
        let mut graph = FeatureGraph::new(config.board_size, Arc::clone(&catalog));
        let start = *board.placed().next().expect("start tile placed");
        graph.add_tile(&start)?;
        let mut deck = catalog.deck();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        deck.shuffle(&mut rng);
        let players = vec![PlayerState { score: 0, meeples: config.meeples_per_player }; config.players];
        Ok(GameState {
            catalog,
            config,
            seed,
            board,
            graph,
            deck,
            next: 0,
            current: 0,
            players,
            drawn: None,
            turn_index: 0,
            discarded: Vec::new(),
            discarded_this_turn: Vec::new(),
            history: Vec::new(),
            final_record: None,
        })
    }

    pub fn catalog(&self) -> &Arc<TileCatalog> {
        &self.catalog
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn board(&self) -> &BoardState {
        &self.board
    }

    pub fn graph(&self) -> &FeatureGraph {
        &self.graph
    }

    pub fn action_space(&self) -> ActionSpace {
        ActionSpace::new(self.config.board_size)
    }

    pub fn current_player(&self) -> PlayerId {
        self.current
    }

    pub fn players(&self) -> &[PlayerState] {
        &self.players
    }

    pub fn scores(&self) -> Vec<u32> {
        self.players.iter().map(|p| p.score).collect()
    }

    pub fn drawn_tile(&self) -> Option<TileKind> {
        self.drawn
    }

    pub fn turn_index(&self) -> usize {
        self.turn_index
    }

    /// Tiles left to draw, not counting a drawn tile.
    pub fn tiles_remaining(&self) -> usize {
        self.deck.len() - self.next
    }

    pub fn deck_order(&self) -> &[TileKind] {
        &self.deck
    }

    pub fn discarded(&self) -> &[TileKind] {
        &self.discarded
    }

    pub fn is_finished(&self) -> bool {
        self.final_record.is_some()
    }

    pub fn meeples_on_board(&self) -> usize {
        self.graph.meeples_on_board().count()
    }

    fn tile_id(&self, kind: TileKind) -> String {
        self.catalog.spec(kind).tile_id.clone()
    }

    /// Draws the next placeable tile. Tiles with no legal placement are
    /// discarded and the next one drawn.
    pub fn draw(&mut self) -> Result<Vec<TurnEvent>, EngineError> {
        if self.drawn.is_some() {
            return Err(EngineError::TilePending);
        }
        let mut events = Vec::new();
        while self.next < self.deck.len() {
            let kind = self.deck[self.next];
            self.next += 1;
            if self.graph.has_legal_placement(kind) {
                self.drawn = Some(kind);
                events.push(TurnEvent::Draw { player: self.current, tile: self.tile_id(kind) });
                return Ok(events);
            }
            self.discarded.push(kind);
            self.discarded_this_turn.push(kind);
            events.push(TurnEvent::Discard { tile: self.tile_id(kind) });
        }
        Err(EngineError::DeckEmpty)
    }

    /// Legal (pos, rotation) pairs for the drawn tile, row-major then rotation.
    pub fn legal_placements(&self) -> Result<Vec<(GridPos, Rotation)>, EngineError> {
        let kind = self.drawn.ok_or(EngineError::NoDrawnTile)?;
        Ok(self.placements_for(kind))
    }

    pub fn placements_for(&self, kind: TileKind) -> Vec<(GridPos, Rotation)> {
        let spec = self.catalog.spec(kind);
        let mut out = Vec::new();
        for pos in self.graph.frontier() {
            for rot in Rotation::ALL {
                if self.graph.is_legal(spec, pos, rot) {
                    out.push((pos, rot));
                }
            }
        }
        out
    }

    fn meeple_option_valid(&self, kind: TileKind, pos: GridPos, rot: Rotation, option: MeepleOption) -> bool {
        let Some(slot) = option.slot() else { return true };
        if self.players[self.current].meeples == 0 {
            return false;
        }
        let spec = self.catalog.spec(kind);
        match spec.slot_class(slot, rot) {
            None => false,
            Some(FeatureClass::Field) if !self.config.rules.fields_enabled => false,
            Some(_) => self.graph.slot_unclaimed(spec, pos, rot, slot),
        }
    }

    pub fn legal_actions(&self) -> Result<ActionMask, EngineError> {
        let kind = self.drawn.ok_or(EngineError::NoDrawnTile)?;
        let space = self.action_space();
        let mut mask = ActionMask::new(space.len());
        for (pos, rot) in self.placements_for(kind) {
            let base = space.placement_base(pos, rot);
            for opt in MeepleOption::ALL {
                if self.meeple_option_valid(kind, pos, rot, opt) {
                    mask.set(base + opt.index(), true);
                }
            }
        }
        Ok(mask)
    }

    pub fn is_legal_action(&self, index: usize) -> bool {
        let Some(kind) = self.drawn else { return false };
        let Ok(a) = self.action_space().decode(index) else { return false };
        self.graph.is_legal(self.catalog.spec(kind), a.pos, a.rotation)
            && self.meeple_option_valid(kind, a.pos, a.rotation, a.meeple)
    }

    /// Places the drawn tile (and optional meeple), scores every feature the
    /// placement completes, and passes the turn.
    pub fn apply(&mut self, index: usize) -> Result<Vec<TurnEvent>, EngineError> {
        let kind = self.drawn.ok_or(EngineError::NoDrawnTile)?;
        let action = self.action_space().decode(index)?;
        if !self.is_legal_action(index) {
            return Err(EngineError::IllegalAction(index));
        }
        let player = self.current;
        let Action { pos, rotation, meeple } = action;
        let scores_before = self.scores();
        let mut events = Vec::new();

        let mut placed = PlacedTile::new(pos, kind, rotation);
        placed.meeple = meeple.slot().map(|slot| Meeple { player, slot });
        self.board.place_mut(placed)?;
        let new_ids = self.graph.add_tile(&placed)?;
        events.push(TurnEvent::PlaceTile {
            player,
            tile: self.tile_id(kind),
            x: pos.x,
            y: pos.y,
            rotation: rotation.quarter_turns(),
        });
        if let Some(slot) = meeple.slot() {
            let v = self.graph.vertex_at(pos, slot).expect("validated slot");
            self.graph.place_meeple(v, player)?;
            self.players[player].meeples -= 1;
            events.push(TurnEvent::PlaceMeeple { player, x: pos.x, y: pos.y, slot });
        }

        for comp in self.completed_by(pos, &new_ids) {
            events.push(TurnEvent::FeatureCompleted { player, feature: comp.class, tiles: comp.tiles.len() });
            self.score_component(&comp, ScoreStage::Midgame, &mut events)?;
        }

        self.drawn = None;
        events.push(TurnEvent::EndTurn { player });
        let deltas = self.scores().iter().zip(&scores_before).map(|(a, b)| a - b).collect();
        self.history.push(TurnRecord {
            turn: self.turn_index,
            player,
            tile: self.tile_id(kind),
            x: pos.x,
            y: pos.y,
            rotation: rotation.quarter_turns(),
            meeple,
            discarded: self.discarded_this_turn.drain(..).map(|k| self.catalog.spec(k).tile_id.clone()).collect(),
            deltas,
        });
        self.turn_index += 1;
        self.current = (self.current + 1) % self.players.len();
        Ok(events)
    }

    /// Features completed by the tile just placed at `pos`.
    fn completed_by(&self, pos: GridPos, new_ids: &[VertexId]) -> Vec<FeatureComponent> {
        let mut out = Vec::new();
        let mut roots = Vec::new();
        for &v in new_ids {
            let class = self.graph.vertex(v).expect("new vertex").class;
            if matches!(class, FeatureClass::Road | FeatureClass::City) && self.graph.open_ends(v) == 0 {
                let r = self.graph.root(v);
                if !roots.contains(&r) {
                    roots.push(r);
                    out.push(self.graph.component_of(v));
                }
            }
        }
        for dy in -1..=1 {
            for dx in -1..=1 {
                let Some(p) = pos.offset(dx, dy, self.config.board_size) else { continue };
                if let Some(v) = self.graph.vertex_at(p, Slot::Center) {
                    let comp = self.graph.component_of(v);
                    if comp.completed {
                        out.push(comp);
                    }
                }
            }
        }
        out
    }

    fn score_component(
        &mut self,
        comp: &FeatureComponent,
        stage: ScoreStage,
        events: &mut Vec<TurnEvent>,
    ) -> Result<(), EngineError> {
        let outcome = self.graph.score(comp, stage, &self.config.rules)?;
        for (&p, &points) in &outcome.points {
            self.players[p].score += points;
            events.push(TurnEvent::Score { player: p, points, feature: comp.class, stage });
        }
        for &(v, p) in &outcome.returned {
            let vert = *self.graph.vertex(v).expect("scored vertex");
            self.graph.remove_meeple(v);
            self.board.set_meeple(vert.pos, None)?;
            self.players[p].meeples += 1;
            events.push(TurnEvent::MeepleReturn { player: p, x: vert.pos.x, y: vert.pos.y, slot: vert.slot });
        }
        Ok(())
    }

    /// End-of-game scoring of every feature still holding meeples.
    pub fn finalize(&mut self) -> Result<(Vec<u32>, Vec<TurnEvent>), EngineError> {
        if self.drawn.is_some() || self.next < self.deck.len() || self.is_finished() {
            return Err(EngineError::GameNotOver);
        }
        let before = self.scores();
        let mut events = Vec::new();
        let mut classes = vec![FeatureClass::Road, FeatureClass::City, FeatureClass::Cloister];
        if self.config.rules.fields_enabled {
            classes.push(FeatureClass::Field);
        }
        for class in classes {
            for comp in self.graph.components(class) {
                if comp.meeple_count() > 0 {
                    self.score_component(&comp, ScoreStage::Endgame, &mut events)?;
                }
            }
        }
        let scores = self.scores();
        self.final_record = Some(FinalRecord {
            scores: scores.clone(),
            endgame_deltas: scores.iter().zip(&before).map(|(a, b)| a - b).collect(),
            discarded: self.discarded_this_turn.drain(..).map(|k| self.catalog.spec(k).tile_id.clone()).collect(),
        });
        Ok((scores, events))
    }

    pub fn record_header(&self) -> RecordHeader {
        RecordHeader {
            format: crate::record::FORMAT.to_string(),
            catalog_hash: self.catalog.hash().to_string(),
            seed: self.seed,
            config: self.config.clone(),
        }
    }

    /// The game so far as a replayable record.
    pub fn record(&self) -> GameRecord {
        GameRecord { header: self.record_header(), turns: self.history.clone(), final_record: self.final_record.clone() }
    }
}
