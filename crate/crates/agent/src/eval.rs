//! Paired-seed evaluation.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use saag_core::{GameConfig, TileCatalog};

use crate::agents::Agent;
use crate::error::AgentError;
use crate::metrics::{SeatStats, TrainMetrics};
use crate::play::{mix_seed, play_game};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub games: usize,
    pub a: TrainMetrics,
    /// Absent for single-player evaluation.
    pub b: Option<TrainMetrics>,
    /// Wins of A over B, ties counted as half.
    pub win_rate: Option<f64>,
    pub a_scores: Vec<u32>,
    pub b_scores: Vec<u32>,
}

fn check(n_games: usize) -> Result<(), AgentError> {
    if n_games == 0 {
        return Err(AgentError::Config("evaluation needs at least one game".into()));
    }
    Ok(())
}

/// Two-seat games; A takes seat 0 in even games and seat 1 in odd games.
/// Game `g` uses the same deck for every pair of agents.
pub fn evaluate(
    catalog: Arc<TileCatalog>,
    board_size: usize,
    a: &dyn Agent,
    b: &dyn Agent,
    n_games: usize,
    seed: u64,
) -> Result<EvalReport, AgentError> {
    check(n_games)?;
    let cfg = GameConfig { board_size, players: 2, ..GameConfig::default() };
    let results: Vec<(SeatStats, SeatStats)> = (0..n_games)
        .into_par_iter()
        .map(|g| {
            let a_seat = g % 2;
            let seats: [&dyn Agent; 2] = if a_seat == 0 { [a, b] } else { [b, a] };
            let out = play_game(Arc::clone(&catalog), cfg.clone(), mix_seed(seed, 2 * g as u64), &seats, mix_seed(seed, 2 * g as u64 + 1))?;
            Ok((out.stats[a_seat], out.stats[1 - a_seat]))
        })
        .collect::<Result<_, AgentError>>()?;
    let sa: Vec<SeatStats> = results.iter().map(|r| r.0).collect();
    let sb: Vec<SeatStats> = results.iter().map(|r| r.1).collect();
    let wins: f64 = results
        .iter()
        .map(|(x, y)| match x.final_score.cmp(&y.final_score) {
            std::cmp::Ordering::Greater => 1.0,
            std::cmp::Ordering::Equal => 0.5,
            std::cmp::Ordering::Less => 0.0,
        })
        .sum();
    Ok(EvalReport {
        games: n_games,
        a: TrainMetrics::from_stats(0, n_games, &sa),
        b: Some(TrainMetrics::from_stats(0, n_games, &sb)),
        win_rate: Some(wins / n_games as f64),
        a_scores: sa.iter().map(|s| s.final_score).collect(),
        b_scores: sb.iter().map(|s| s.final_score).collect(),
    })
}

/// Single-player games on seeds shared by every agent evaluated with the same `seed`.
pub fn evaluate_solo(
    catalog: Arc<TileCatalog>,
    board_size: usize,
    agent: &dyn Agent,
    n_games: usize,
    seed: u64,
) -> Result<EvalReport, AgentError> {
    check(n_games)?;
    let cfg = GameConfig { board_size, players: 1, ..GameConfig::default() };
    let stats: Vec<SeatStats> = (0..n_games)
        .into_par_iter()
        .map(|g| {
            let out = play_game(Arc::clone(&catalog), cfg.clone(), mix_seed(seed, 2 * g as u64), &[agent], mix_seed(seed, 2 * g as u64 + 1))?;
            Ok(out.stats[0])
        })
        .collect::<Result<_, AgentError>>()?;
    Ok(EvalReport {
        games: n_games,
        a: TrainMetrics::from_stats(0, n_games, &stats),
        b: None,
        win_rate: None,
        a_scores: stats.iter().map(|s| s.final_score).collect(),
        b_scores: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::RandomAgent;

    #[test]
    fn random_vs_random_reproducible() {
        let cat = Arc::new(TileCatalog::base());
        let r1 = evaluate(cat.clone(), 9, &RandomAgent, &RandomAgent, 2, 3).unwrap();
        let r2 = evaluate(cat.clone(), 9, &RandomAgent, &RandomAgent, 2, 3).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.a.point_turns >= 0.0 && r1.win_rate.unwrap() <= 1.0);
        assert!(evaluate(cat, 9, &RandomAgent, &RandomAgent, 0, 3).is_err());
    }
}
