use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use saag_agent::metrics::COLUMNS;
use saag_agent::{evaluate, evaluate_solo, TrainMetrics};

use super::{comment_block, provenance, write_file};
use crate::agents::{select_mode, AgentSpec};
use crate::config::resolve;
use crate::{CliError, Ctx};

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// First agent: random, greedy, untrained[:SEED] or policy:PATH.
    #[arg(long)]
    pub a: Option<String>,
    /// Second agent.
    #[arg(long)]
    pub b: Option<String>,
    #[arg(long)]
    pub games: Option<usize>,
    #[arg(long)]
    pub board_size: Option<usize>,
    /// Play each agent alone on the same decks instead of head to head.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub solo: Option<bool>,
    /// Policy action selection: sample or greedy.
    #[arg(long)]
    pub select: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSettings {
    pub a: String,
    pub b: String,
    pub games: usize,
    pub board_size: usize,
    pub solo: bool,
    pub select: String,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            a: "greedy".into(),
            b: "random".into(),
            games: 100,
            board_size: 9,
            solo: false,
            select: "sample".into(),
            seed: 0,
            out: None,
        }
    }
}

fn row(out: &mut String, label: &str, m: &TrainMetrics, win_rate: Option<f64>) {
    let wr = win_rate.map_or(String::new(), |w| format!("{w:.6}"));
    out.push_str(&format!(
        "{label},{},{wr},{:.6},{:.6},{:.6},{:.6}\n",
        m.games, m.cities_completed, m.meeples_remaining, m.point_turns, m.final_score
    ));
}

pub fn eval(ctx: &mut Ctx, args: &EvalArgs) -> Result<(), CliError> {
    let s: EvalSettings = resolve(&ctx.file, "eval", args)?;
    if s.games == 0 {
        return Err(CliError::Usage("--games must be at least 1".into()));
    }
    let mode = select_mode(&s.select)?;
    let a = s.a.parse::<AgentSpec>()?.build(s.board_size, mode)?;
    let b = s.b.parse::<AgentSpec>()?.build(s.board_size, mode)?;
    ctx.echo("eval", &s)?;
    let (ma, mb, wr) = if s.solo {
        let ra = evaluate_solo(ctx.catalog.clone(), s.board_size, a.as_ref(), s.games, s.seed)?;
        let rb = evaluate_solo(ctx.catalog.clone(), s.board_size, b.as_ref(), s.games, s.seed)?;
        let wins: f64 = ra.a_scores.iter().zip(&rb.a_scores).map(|(x, y)| f64::from(u8::from(x > y)) + if x == y { 0.5 } else { 0.0 }).sum();
        (ra.a, rb.a, wins / s.games as f64)
    } else {
        let r = evaluate(ctx.catalog.clone(), s.board_size, a.as_ref(), b.as_ref(), s.games, s.seed)?;
        let wr = r.win_rate.expect("head-to-head has a win rate");
        (r.a, r.b.expect("head-to-head has two rows"), wr)
    };
    let mut csv = comment_block(&provenance("eval", &EvalSettings { out: None, ..s.clone() }, ctx.catalog.hash()));
    csv.push_str(&format!("agent,games,win_rate,{}\n", COLUMNS[2..].join(",")));
    row(&mut csv, &s.a, &ma, Some(wr));
    row(&mut csv, &s.b, &mb, Some(1.0 - wr));
    match &s.out {
        Some(p) => {
            write_file(p, &csv)?;
            writeln!(ctx.out, "A win rate {wr:.3} over {} games; written to {}", s.games, p.display())?;
        }
        None => ctx.out.write_all(csv.as_bytes())?,
    }
    Ok(())
}
