//! Move-choosing agents.

use rand::seq::IteratorRandom;
use rand_chacha::ChaCha8Rng;

use saag_core::GameState;

use crate::dist::{policy_forward, select_action, SelectMode};
use crate::error::AgentError;
use crate::net::PolicyParams;
use crate::observe::observe;

pub trait Agent: Sync {
    fn name(&self) -> String;

    /// Picks a legal action index for the player to move. A tile must be drawn.
    fn act(&self, state: &GameState, rng: &mut ChaCha8Rng) -> Result<usize, AgentError>;
}

/// Uniform over legal actions.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomAgent;

impl Agent for RandomAgent {
    fn name(&self) -> String {
        "random".into()
    }

    fn act(&self, state: &GameState, rng: &mut ChaCha8Rng) -> Result<usize, AgentError> {
        state.legal_actions()?.iter_ones().choose(rng).ok_or(AgentError::EmptyMask)
    }
}

/// Maximizes its own immediate score gain. Ties go to the placement with
/// more occupied neighbours, then to the lowest action index, so meeples
/// are only spent when they score at once.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyAgent;

impl Agent for GreedyAgent {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn act(&self, state: &GameState, _rng: &mut ChaCha8Rng) -> Result<usize, AgentError> {
        let me = state.current_player();
        let before = state.players()[me].score;
        let space = state.action_space();
        let mut best: Option<((u32, usize), usize)> = None;
        for idx in state.legal_actions()?.iter_ones() {
            let a = space.decode(idx)?;
            let mut s = state.clone();
            s.apply(idx)?;
            let gain = s.players()[me].score - before;
            let key = (gain, state.board().occupied_neighbor_count(a.pos));
            if best.is_none_or(|(k, _)| key > k) {
                best = Some((key, idx));
            }
        }
        best.map(|(_, i)| i).ok_or(AgentError::EmptyMask)
    }
}

/// Acts from a policy network.
#[derive(Debug, Clone)]
pub struct PolicyAgent {
    pub params: PolicyParams,
    pub mode: SelectMode,
}

impl PolicyAgent {
    pub fn new(params: PolicyParams, mode: SelectMode) -> PolicyAgent {
        PolicyAgent { params, mode }
    }
}

impl Agent for PolicyAgent {
    fn name(&self) -> String {
        format!("policy:{}", self.params.id)
    }

    fn act(&self, state: &GameState, rng: &mut ChaCha8Rng) -> Result<usize, AgentError> {
        let obs = observe(state, state.current_player());
        let dist = policy_forward(&self.params, &obs, &state.legal_actions()?)?;
        Ok(select_action(&dist, self.mode, rng))
    }
}
