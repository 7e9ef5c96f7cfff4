#![allow(dead_code)]

use std::sync::Arc;

use rand::seq::IteratorRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use saag_core::{EngineError, GameConfig, GameState, TileCatalog, TurnEvent};

pub fn catalog() -> Arc<TileCatalog> {
    Arc::new(TileCatalog::base())
}

pub fn config(board_size: usize, players: usize) -> GameConfig {
    GameConfig { board_size, players, ..GameConfig::default() }
}

/// Plays uniformly random legal actions to the end, calling `after_turn`
/// with the state and the events of each turn.
pub fn random_game<F>(cfg: GameConfig, seed: u64, mut after_turn: F) -> GameState
where
    F: FnMut(&GameState, &[TurnEvent]),
{
    let mut state = GameState::new(catalog(), cfg, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    loop {
        let mut events = match state.draw() {
            Ok(ev) => ev,
            Err(EngineError::DeckEmpty) => break,
            Err(e) => panic!("{e}"),
        };
        let mask = state.legal_actions().unwrap();
        let a = mask.iter_ones().choose(&mut rng).expect("drawn tile is placeable");
        events.extend(state.apply(a).unwrap());
        after_turn(&state, &events);
    }
    let (_, events) = state.finalize().unwrap();
    after_turn(&state, &events);
    state
}
