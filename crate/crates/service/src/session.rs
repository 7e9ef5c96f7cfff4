//! Session logic, independent of the HTTP layer.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tokio::sync::broadcast;

use saag_agent::{Agent, GreedyAgent, PolicyAgent, PolicyParams, RandomAgent, SelectMode};
use saag_core::gaze::{heatmap, GazeSample, GazeTrace};
use saag_core::{mix_seed, Checkpoint, EngineError, GameConfig, GameState, TileCatalog, TurnEvent};
use saag_situation::{predict, GcnParams};

use crate::api::*;
use crate::error::ServiceError;

pub const LOG_FORMAT: &str = "saag-session/1";
/// Environment variable naming the checkpoint directory.
pub const PARAMS_DIR_ENV: &str = "SAAG_PARAMS_DIR";

/// Checkpoints stored as `<dir>/<id>.ckpt`.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    dir: Option<PathBuf>,
}

impl ParamStore {
    pub fn new(dir: Option<PathBuf>) -> ParamStore {
        ParamStore { dir }
    }

    pub fn from_env() -> ParamStore {
        ParamStore::new(std::env::var_os(PARAMS_DIR_ENV).map(PathBuf::from))
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn load(&self, id: &str) -> Result<Checkpoint, ServiceError> {
        let ok = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.');
        let dir = self.dir.as_ref().filter(|_| ok && !id.starts_with('.'));
        let path = dir.map(|d| d.join(format!("{id}.ckpt"))).filter(|p| p.is_file());
        let path = path.ok_or_else(|| ServiceError::UnknownParams(id.to_string()))?;
        Checkpoint::load(&path).map_err(|e| ServiceError::BadConfig(format!("params {id}: {e}")))
    }

    pub fn policy(&self, id: &str) -> Result<PolicyParams, ServiceError> {
        PolicyParams::from_checkpoint(&self.load(id)?).map_err(|e| ServiceError::BadConfig(format!("params {id}: {e}")))
    }

    pub fn situation(&self, id: &str) -> Result<GcnParams, ServiceError> {
        GcnParams::from_checkpoint(&self.load(id)?).map_err(|e| ServiceError::BadConfig(format!("params {id}: {e}")))
    }
}

pub struct Session {
    id: String,
    config: SessionConfig,
    state: GameState,
    agent: Box<dyn Agent + Send>,
    gcn: Option<Arc<GcnParams>>,
    header_events: Vec<SeqEvent>,
    log: Vec<LogEntry>,
    last_events: Vec<SeqEvent>,
    next_seq: u64,
    gaze: Vec<GazeTrace>,
    tx: broadcast::Sender<StreamMsg>,
}

/// Items on the live event stream.
#[derive(Debug, Clone, PartialEq)]
pub enum StreamMsg {
    Event(SeqEvent),
    GameOver(Vec<u32>),
}

fn engine(e: EngineError) -> ServiceError {
    ServiceError::Internal(e.to_string())
}

/// Draws the next tile, or scores the endgame once the deck is exhausted.
/// Tiles discarded on the way to an empty deck are reported as well.
fn advance(state: &mut GameState) -> Result<Vec<TurnEvent>, ServiceError> {
    let discarded = state.discarded().len();
    match state.draw() {
        Ok(ev) => Ok(ev),
        Err(EngineError::DeckEmpty) => {
            let mut ev: Vec<TurnEvent> = state.discarded()[discarded..]
                .iter()
                .map(|k| TurnEvent::Discard { tile: state.catalog().spec(*k).tile_id.clone() })
                .collect();
            ev.extend(state.finalize().map_err(engine)?.1);
            Ok(ev)
        }
        Err(e) => Err(engine(e)),
    }
}

impl Session {
    /// Validates `config`, starts the game and plays AI turns until a human
    /// must move or the game ends.
    pub fn create(id: String, config: SessionConfig, catalog: Arc<TileCatalog>, store: &ParamStore) -> Result<Session, ServiceError> {
        let mut s = Session::build(id, config, catalog, store)?;
        let opening = advance(&mut s.state)?;
        s.header_events = s.emit(opening);
        s.last_events = s.header_events.clone();
        let ai = s.play_ai()?;
        s.last_events.extend(ai);
        Ok(s)
    }

    fn build(id: String, mut config: SessionConfig, catalog: Arc<TileCatalog>, store: &ParamStore) -> Result<Session, ServiceError> {
        if config.seats.len() != config.players {
            return Err(ServiceError::BadConfig(format!("{} seats for {} players", config.seats.len(), config.players)));
        }
        let game = GameConfig { board_size: config.board_size, players: config.players, ..GameConfig::default() };
        game.validate().map_err(|e| ServiceError::BadConfig(e.to_string()))?;
        let seed = *config.seed.get_or_insert_with(rand::random);
        let agent: Box<dyn Agent + Send> = match (config.ai, &config.policy) {
            (AiKind::Policy, Some(id)) => {
                let params = store.policy(id)?;
                let want = saag_core::ActionSpace::new(config.board_size).len();
                if params.arch.actions != want {
                    return Err(ServiceError::BadConfig(format!("policy {id} has {} actions, board needs {want}", params.arch.actions)));
                }
                Box::new(PolicyAgent::new(params, SelectMode::Greedy))
            }
            (AiKind::Policy, None) => return Err(ServiceError::BadConfig("ai \"policy\" needs a policy id".into())),
            (_, Some(_)) => return Err(ServiceError::BadConfig("a policy id is only used with ai \"policy\"".into())),
            (AiKind::Greedy, None) => Box::new(GreedyAgent),
            (AiKind::Random, None) => Box::new(RandomAgent),
        };
        let gcn = config.situation.as_deref().map(|id| store.situation(id).map(Arc::new)).transpose()?;
        let state = GameState::new(catalog, game, seed).map_err(|e| ServiceError::BadConfig(e.to_string()))?;
        let (tx, _) = broadcast::channel(1024);
        Ok(Session {
            id,
            gaze: vec![GazeTrace::default(); config.players],
            config,
            state,
            agent,
            gcn,
            header_events: Vec::new(),
            log: Vec::new(),
            last_events: Vec::new(),
            next_seq: 0,
            tx,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn subscribe(&self) -> broadcast::Receiver<StreamMsg> {
        self.tx.subscribe()
    }

    /// Every event so far with `seq >= since`.
    pub fn events_since(&self, since: u64) -> Vec<SeqEvent> {
        self.header_events.iter().chain(self.log.iter().flat_map(|e| &e.events)).filter(|e| e.seq >= since).cloned().collect()
    }

    fn emit(&mut self, events: Vec<TurnEvent>) -> Vec<SeqEvent> {
        events
            .into_iter()
            .map(|event| {
                let e = SeqEvent { seq: self.next_seq, event };
                self.next_seq += 1;
                // no subscribers is fine
                let _ = self.tx.send(StreamMsg::Event(e.clone()));
                e
            })
            .collect()
    }

    fn apply_logged(&mut self, seat: usize, action: usize) -> Result<Vec<SeqEvent>, ServiceError> {
        let mut ev = self.state.apply(action).map_err(engine)?;
        ev.extend(advance(&mut self.state)?);
        let events = self.emit(ev);
        self.log.push(LogEntry { seat, action, events: events.clone() });
        if self.state.is_finished() {
            let _ = self.tx.send(StreamMsg::GameOver(self.state.scores()));
        }
        Ok(events)
    }

    fn ai_to_move(&self) -> bool {
        !self.state.is_finished() && self.state.drawn_tile().is_some() && self.config.seats[self.state.current_player()] == SeatKind::Ai
    }

    fn play_ai(&mut self) -> Result<Vec<SeqEvent>, ServiceError> {
        let mut out = Vec::new();
        while self.ai_to_move() {
            let seat = self.state.current_player();
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.config.seed.unwrap_or(0), 0x5EED_0000 + self.log.len() as u64));
            let action = self.agent.act(&self.state, &mut rng).map_err(|e| ServiceError::Internal(e.to_string()))?;
            if !self.state.is_legal_action(action) {
                return Err(ServiceError::Internal(format!("agent chose illegal action {action}")));
            }
            out.extend(self.apply_logged(seat, action)?);
        }
        Ok(out)
    }

    /// Applies a human action, then any AI turns that follow.
    pub fn submit(&mut self, seat: usize, action: usize) -> Result<Vec<SeqEvent>, ServiceError> {
        if seat >= self.config.players {
            return Err(ServiceError::InvalidSeat(seat));
        }
        if self.state.drawn_tile().is_none() {
            return Err(ServiceError::NoDrawnTile);
        }
        let current = self.state.current_player();
        if seat != current || self.config.seats[seat] != SeatKind::Human {
            return Err(ServiceError::NotYourTurn { seat, current });
        }
        if !self.state.is_legal_action(action) {
            let mask = self.state.legal_actions().map_err(engine)?.iter_ones().collect();
            return Err(ServiceError::IllegalAction { action, mask });
        }
        let mut events = self.apply_logged(seat, action)?;
        events.extend(self.play_ai()?);
        self.last_events = events.clone();
        Ok(events)
    }

    pub fn snapshot(&self) -> Snapshot {
        let st = &self.state;
        let cat = st.catalog();
        let mut board: Vec<PlacedView> = st
            .board()
            .placed()
            .map(|p| PlacedView {
                x: p.pos.x,
                y: p.pos.y,
                tile: cat.spec(p.kind).tile_id.clone(),
                rotation: p.rotation.quarter_turns(),
                meeple: p.meeple.map(|m| MeepleView { player: m.player, slot: m.slot.as_str().to_string() }),
            })
            .collect();
        board.sort_by_key(|p| (p.y, p.x));
        let mut placements: Vec<PlacementView> = Vec::new();
        if let Ok(list) = st.legal_placements() {
            for (pos, rot) in list {
                match placements.last_mut() {
                    Some(p) if p.x == pos.x && p.y == pos.y => p.rotations.push(rot.quarter_turns()),
                    _ => placements.push(PlacementView { x: pos.x, y: pos.y, rotations: vec![rot.quarter_turns()] }),
                }
            }
        }
        let count = st.legal_actions().map(|m| m.count_ones()).unwrap_or(0);
        Snapshot {
            session_id: self.id.clone(),
            seed: self.config.seed.unwrap_or(0),
            board_size: self.config.board_size,
            seats: self.config.seats.clone(),
            turn_index: st.turn_index(),
            current_player: st.current_player(),
            drawn_tile: st.drawn_tile().map(|k| cat.spec(k).tile_id.clone()),
            tiles_remaining: st.tiles_remaining(),
            finished: st.is_finished(),
            scores: st.scores(),
            meeples: st.players().iter().map(|p| p.meeples).collect(),
            board,
            legal: LegalSummary { count, placements },
            last_events: self.last_events.clone(),
            next_seq: self.next_seq,
            policy: self.config.policy.clone(),
            situation: self.config.situation.clone(),
        }
    }

    pub fn actions(&self) -> Result<ActionsResponse, ServiceError> {
        let mask = self.state.legal_actions().map_err(|_| ServiceError::NoDrawnTile)?;
        let space = self.state.action_space();
        let actions = mask
            .iter_ones()
            .map(|i| {
                let a = space.decode(i).map_err(engine)?;
                Ok(ActionView { index: i, x: a.pos.x, y: a.pos.y, rotation: a.rotation.quarter_turns(), meeple: a.meeple })
            })
            .collect::<Result<Vec<_>, ServiceError>>()?;
        Ok(ActionsResponse { count: actions.len(), actions })
    }

    pub fn predictions(&self, k: usize) -> Result<PredictionsResponse, ServiceError> {
        if k == 0 {
            return Err(ServiceError::Malformed("k must be at least 1".into()));
        }
        let tile = self.state.drawn_tile().ok_or(ServiceError::NoDrawnTile)?;
        let gcn = self.gcn.as_ref().ok_or(ServiceError::NoSituationModel)?;
        let predictions = predict(gcn, &self.state, tile, k).map_err(|e| ServiceError::Internal(e.to_string()))?;
        Ok(PredictionsResponse {
            tile: self.state.catalog().spec(tile).tile_id.clone(),
            situation: self.config.situation.clone().unwrap_or_default(),
            predictions,
        })
    }

    fn human_seat(&self, seat: usize) -> Result<(), ServiceError> {
        match self.config.seats.get(seat) {
            Some(SeatKind::Human) => Ok(()),
            _ => Err(ServiceError::InvalidSeat(seat)),
        }
    }

    pub fn post_gaze(&mut self, seat: usize, samples: &[GazeSampleBody]) -> Result<GazeResponse, ServiceError> {
        self.human_seat(seat)?;
        let more: Vec<GazeSample> = samples.iter().map(|s| GazeSample::new(s.t_ms, s.x, s.y, s.valid)).collect();
        let trace = self.gaze[seat].extended(&more).map_err(|e| ServiceError::Malformed(e.to_string()))?;
        self.gaze[seat] = trace;
        Ok(GazeResponse { seat, accepted: more.len(), total: self.gaze[seat].len() })
    }

    pub fn heatmap(&self, seat: usize, half_life_ms: Option<f64>) -> Result<HeatmapResponse, ServiceError> {
        self.human_seat(seat)?;
        let hm = heatmap(&self.gaze[seat], self.config.board_size, half_life_ms);
        Ok(HeatmapResponse {
            seat,
            side: hm.side,
            total_dwell_ms: hm.total_dwell_ms,
            off_board_ms: hm.off_board,
            mass: hm.mass(),
            grid: hm.grid,
        })
    }

    pub fn log_header(&self) -> LogHeader {
        LogHeader { format: LOG_FORMAT.into(), session_id: self.id.clone(), config: self.config.clone(), events: self.header_events.clone() }
    }

    /// The event log as NDJSON: a header line, then one line per action.
    pub fn log_text(&self) -> String {
        let mut out = serde_json::to_string(&self.log_header()).expect("serializable");
        out.push('\n');
        for e in &self.log {
            out.push_str(&serde_json::to_string(e).expect("serializable"));
            out.push('\n');
        }
        out
    }

    /// Rebuilds the game from the event log alone, checking every event.
    pub fn replay_state(&self) -> Result<GameState, ServiceError> {
        replay_log(&self.log_header(), &self.log, self.state.catalog().clone())
    }

    /// Restores a session from its persisted log.
    pub fn from_log(text: &str, catalog: Arc<TileCatalog>, store: &ParamStore) -> Result<Session, ServiceError> {
        let (header, entries) = parse_log(text)?;
        let state = replay_log(&header, &entries, catalog.clone())?;
        let mut s = Session::build(header.session_id.clone(), header.config.clone(), catalog, store)?;
        s.state = state;
        s.header_events = header.events;
        s.next_seq = entries.last().and_then(|e| e.events.last()).or(s.header_events.last()).map_or(0, |e| e.seq + 1);
        s.log = entries;
        // the last request's events: the last human action and the AI turns after it
        let human = s.log.iter().rposition(|e| s.config.seats[e.seat] == SeatKind::Human);
        let from = human.map_or(s.header_events.first().map_or(0, |e| e.seq), |i| s.log[i].events.first().map_or(0, |e| e.seq));
        s.last_events = s.events_since(from);
        Ok(s)
    }
}

pub fn parse_log(text: &str) -> Result<(LogHeader, Vec<LogEntry>), ServiceError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines.next().ok_or_else(|| ServiceError::Replay("empty log".into()))?;
    let header: LogHeader = serde_json::from_str(first).map_err(|e| ServiceError::Replay(format!("header: {e}")))?;
    if header.format != LOG_FORMAT {
        return Err(ServiceError::Replay(format!("unknown log format {}", header.format)));
    }
    let entries = lines
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| ServiceError::Replay(format!("entry {i}: {e}"))))
        .collect::<Result<Vec<LogEntry>, _>>()?;
    Ok((header, entries))
}

pub fn replay_log(header: &LogHeader, entries: &[LogEntry], catalog: Arc<TileCatalog>) -> Result<GameState, ServiceError> {
    let cfg = &header.config;
    let seed = cfg.seed.ok_or_else(|| ServiceError::Replay("log has no resolved seed".into()))?;
    let game = GameConfig { board_size: cfg.board_size, players: cfg.players, ..GameConfig::default() };
    let mut state = GameState::new(catalog, game, seed).map_err(|e| ServiceError::Replay(e.to_string()))?;
    let check = |got: Vec<TurnEvent>, want: &[SeqEvent], at: &str| {
        if got.len() != want.len() || got.iter().zip(want).any(|(a, b)| *a != b.event) {
            return Err(ServiceError::Replay(format!("events diverge at {at}")));
        }
        Ok(())
    };
    check(advance(&mut state)?, &header.events, "opening")?;
    for (i, e) in entries.iter().enumerate() {
        if state.current_player() != e.seat {
            return Err(ServiceError::Replay(format!("entry {i}: seat {} acted out of turn", e.seat)));
        }
        let mut ev = state.apply(e.action).map_err(|err| ServiceError::Replay(format!("entry {i}: {err}")))?;
        ev.extend(advance(&mut state)?);
        check(ev, &e.events, &format!("entry {i}"))?;
    }
    Ok(state)
}
