//! Playing whole games with a set of agents.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use saag_core::{EngineError, FeatureClass, GameConfig, GameRecord, GameState, TileCatalog, TurnEvent};

use crate::agents::Agent;
use crate::error::AgentError;
use crate::metrics::SeatStats;

pub use saag_core::mix_seed;

#[derive(Debug, Clone)]
pub struct GameOutcome {
    pub record: GameRecord,
    pub scores: Vec<u32>,
    pub stats: Vec<SeatStats>,
    /// Turns played by all seats.
    pub turns: usize,
}

/// Accumulates [`SeatStats`] from engine events.
#[derive(Debug, Clone)]
pub struct StatsTracker {
    pub stats: Vec<SeatStats>,
}

impl StatsTracker {
    pub fn new(players: usize) -> StatsTracker {
        StatsTracker { stats: vec![SeatStats::default(); players] }
    }

    /// Records one turn by `player` given the score before the turn.
    pub fn turn(&mut self, state: &GameState, player: usize, score_before: u32, events: &[TurnEvent]) {
        let s = &mut self.stats[player];
        s.turns += 1;
        s.meeples_sum += state.players()[player].meeples;
        if state.players()[player].score > score_before {
            s.point_turns += 1;
        }
        for e in events {
            if let TurnEvent::FeatureCompleted { player: p, feature: FeatureClass::City, .. } = e {
                self.stats[*p].cities_completed += 1;
            }
        }
    }

    pub fn finish(&mut self, state: &GameState) {
        for (s, p) in self.stats.iter_mut().zip(state.players()) {
            s.final_score = p.score;
        }
    }
}

/// Plays one game, seat `i` driven by `agents[i]`. Returns once the deck is
/// exhausted and endgame scoring is done.
pub fn play_game(
    catalog: Arc<TileCatalog>,
    config: GameConfig,
    seed: u64,
    agents: &[&dyn Agent],
    action_seed: u64,
) -> Result<GameOutcome, AgentError> {
    if agents.len() != config.players {
        return Err(AgentError::Config(format!("{} agents for {} seats", agents.len(), config.players)));
    }
    let mut state = GameState::new(catalog, config, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(action_seed);
    let mut tracker = StatsTracker::new(agents.len());
    let mut turns = 0;
    loop {
        match state.draw() {
            Ok(_) => {}
            Err(EngineError::DeckEmpty) => break,
            Err(e) => return Err(e.into()),
        }
        let p = state.current_player();
        let before = state.players()[p].score;
        let action = agents[p].act(&state, &mut rng)?;
        let events = state.apply(action)?;
        tracker.turn(&state, p, before, &events);
        turns += 1;
    }
    let (scores, _) = state.finalize()?;
    tracker.finish(&state);
    Ok(GameOutcome { record: state.record(), scores, stats: tracker.stats, turns })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{GreedyAgent, RandomAgent};

    #[test]
    fn random_games_are_reproducible() {
        let cfg = GameConfig { board_size: 9, ..GameConfig::default() };
        let cat = Arc::new(TileCatalog::base());
        let agents: [&dyn Agent; 2] = [&RandomAgent, &RandomAgent];
        let a = play_game(cat.clone(), cfg.clone(), 4, &agents, 5).unwrap();
        let b = play_game(cat.clone(), cfg.clone(), 4, &agents, 5).unwrap();
        assert_eq!(a.record.to_text(), b.record.to_text());
        assert_eq!(a.stats, b.stats);
        assert_eq!(saag_core::replay(&a.record, cat).unwrap().scores(), a.scores);
    }

    #[test]
    fn greedy_outscores_random_solo() {
        let cfg = GameConfig { board_size: 11, players: 1, ..GameConfig::default() };
        let cat = Arc::new(TileCatalog::base());
        let total = |agent: &dyn Agent| -> u32 {
            (0..6).map(|g| play_game(cat.clone(), cfg.clone(), g, &[agent], g).unwrap().scores[0]).sum()
        };
        assert!(total(&GreedyAgent) > total(&RandomAgent));
    }
}
