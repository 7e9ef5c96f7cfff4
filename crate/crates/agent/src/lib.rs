//! Gameplay agent: observation encoding, masked policy network, REINFORCE
//! training in single-player and self-play regimes, and evaluation.

pub mod agents;
pub mod dist;
pub mod error;
pub mod eval;
pub mod metrics;
pub mod net;
pub mod observe;
pub mod play;
pub mod train;

pub use agents::{Agent, GreedyAgent, PolicyAgent, RandomAgent};
pub use dist::{policy_forward, select_action, Distribution, SelectMode};
pub use error::AgentError;
pub use eval::{evaluate, evaluate_solo, EvalReport};
pub use metrics::{metrics_csv, SeatStats, TrainMetrics};
pub use net::{PolicyArch, PolicyParams};
pub use observe::{observe, Observation};
pub use play::{play_game, GameOutcome};
pub use train::{train, train_self_play, train_single_player, TrainConfig, TrainMode, TrainOutput};
