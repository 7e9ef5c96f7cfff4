//! Per-game statistics and the metric series written during training.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Column names of the metrics CSV, in order.
pub const COLUMNS: [&str; 6] = [
    "checkpoint",
    "episodes",
    "Number of cities completed",
    "Average number of meeples remaining per turn",
    "Number of turns where points were gained",
    "Mean final score",
];

/// One seat's view of one finished game.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SeatStats {
    /// Cities completed by this seat's placements.
    pub cities_completed: u32,
    /// Sum over the seat's turns of meeples in hand after the turn.
    pub meeples_sum: u32,
    pub turns: u32,
    /// Own turns with a positive own score change.
    pub point_turns: u32,
    pub final_score: u32,
}

impl SeatStats {
    pub fn meeples_per_turn(&self) -> f64 {
        if self.turns == 0 {
            0.0
        } else {
            f64::from(self.meeples_sum) / f64::from(self.turns)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub checkpoint: usize,
    /// Episodes completed when the checkpoint was taken.
    pub episodes: usize,
    pub cities_completed: f64,
    pub meeples_remaining: f64,
    pub point_turns: f64,
    pub final_score: f64,
    /// Games the means are taken over.
    pub games: usize,
}

impl TrainMetrics {
    pub fn from_stats(checkpoint: usize, episodes: usize, stats: &[SeatStats]) -> TrainMetrics {
        let n = stats.len().max(1) as f64;
        let mean = |f: &dyn Fn(&SeatStats) -> f64| stats.iter().map(f).sum::<f64>() / n;
        TrainMetrics {
            checkpoint,
            episodes,
            cities_completed: mean(&|s| f64::from(s.cities_completed)),
            meeples_remaining: mean(&|s| s.meeples_per_turn()),
            point_turns: mean(&|s| f64::from(s.point_turns)),
            final_score: mean(&|s| f64::from(s.final_score)),
            games: stats.len(),
        }
    }
}

/// CSV with `#`-prefixed provenance lines (config, seed) before the header row.
pub fn metrics_csv(provenance: &[String], rows: &[TrainMetrics]) -> String {
    let mut out = String::new();
    for line in provenance {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str(&COLUMNS.join(","));
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6}",
            r.checkpoint, r.episodes, r.cities_completed, r.meeples_remaining, r.point_turns, r.final_score
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn means_and_csv() {
        let s = [
            SeatStats { cities_completed: 2, meeples_sum: 30, turns: 10, point_turns: 4, final_score: 20 },
            SeatStats { cities_completed: 0, meeples_sum: 10, turns: 10, point_turns: 2, final_score: 10 },
        ];
        let m = TrainMetrics::from_stats(1, 8, &s);
        assert_eq!((m.cities_completed, m.meeples_remaining, m.point_turns, m.final_score), (1.0, 2.0, 3.0, 15.0));
        let csv = metrics_csv(&["seed 3".into()], &[m]);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "# seed 3");
        assert!(lines[1].contains("Number of cities completed,Average number of meeples remaining per turn,Number of turns where points were gained"));
        assert_eq!(lines[2], "1,8,1.000000,2.000000,3.000000,15.000000");
    }
}
