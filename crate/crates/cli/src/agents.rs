//! Agent specs on the command line: `random`, `greedy`, `untrained[:SEED]`
//! or `policy:PATH`.

use std::path::PathBuf;

use saag_agent::{Agent, GreedyAgent, PolicyAgent, PolicyArch, PolicyParams, RandomAgent, SelectMode};
use saag_core::Checkpoint;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum AgentSpec {
    Random,
    Greedy,
    Untrained(u64),
    Policy(PathBuf),
}

impl std::str::FromStr for AgentSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<AgentSpec, CliError> {
        let bad = || CliError::Usage(format!("unknown agent '{s}' (random, greedy, untrained[:SEED], policy:PATH)"));
        match s.split_once(':') {
            None => match s {
                "random" => Ok(AgentSpec::Random),
                "greedy" => Ok(AgentSpec::Greedy),
                "untrained" => Ok(AgentSpec::Untrained(0)),
                _ => Err(bad()),
            },
            Some(("untrained", seed)) => seed.parse().map(AgentSpec::Untrained).map_err(|_| bad()),
            Some(("policy", path)) if !path.is_empty() => Ok(AgentSpec::Policy(path.into())),
            _ => Err(bad()),
        }
    }
}

impl AgentSpec {
    pub fn build(&self, board_size: usize, mode: SelectMode) -> Result<Box<dyn Agent + Send>, CliError> {
        Ok(match self {
            AgentSpec::Random => Box::new(RandomAgent),
            AgentSpec::Greedy => Box::new(GreedyAgent),
            AgentSpec::Untrained(seed) => Box::new(PolicyAgent::new(PolicyParams::init(PolicyArch::for_board(board_size), *seed), mode)),
            AgentSpec::Policy(path) => {
                let params = PolicyParams::from_checkpoint(&Checkpoint::load(path)?)?;
                let want = saag_core::ActionSpace::new(board_size).len();
                if params.arch.actions != want {
                    return Err(CliError::Usage(format!(
                        "policy {} expects {} actions, board size {board_size} has {want}",
                        path.display(),
                        params.arch.actions
                    )));
                }
                Box::new(PolicyAgent::new(params, mode))
            }
        })
    }
}

pub fn select_mode(s: &str) -> Result<SelectMode, CliError> {
    match s {
        "sample" => Ok(SelectMode::Sample),
        "greedy" => Ok(SelectMode::Greedy),
        _ => Err(CliError::Usage(format!("select must be sample or greedy, not '{s}'"))),
    }
}
