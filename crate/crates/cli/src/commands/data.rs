use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use saag_agent::{play_game, Agent};
use saag_core::{mix_seed, replay_states, CandidateBoard, GameConfig, GameRecord, TileCatalog};
use saag_situation::{generate_dataset, parse_dataset, train_situation_model, write_dataset, GcnArch, GcnConfig};

use super::{comment_block, provenance, write_file};
use crate::agents::{select_mode, AgentSpec};
use crate::config::resolve;
use crate::{CliError, Ctx};

#[derive(Debug, Args, Serialize)]
pub struct GenGamesArgs {
    #[arg(long)]
    pub games: Option<usize>,
    #[arg(long)]
    pub board_size: Option<usize>,
    #[arg(long)]
    pub players: Option<usize>,
    /// Agent for every seat: random, greedy, untrained[:SEED] or policy:PATH.
    #[arg(long)]
    pub agent: Option<String>,
    /// Policy action selection: sample or greedy.
    #[arg(long)]
    pub select: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; one `game-NNNNN.ndjson` per game.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenGamesSettings {
    pub games: usize,
    pub board_size: usize,
    pub players: usize,
    pub agent: String,
    pub select: String,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for GenGamesSettings {
    fn default() -> Self {
        GenGamesSettings {
            games: 100,
            board_size: 15,
            players: 2,
            agent: "greedy".into(),
            select: "sample".into(),
            seed: 0,
            out: "runs/games".into(),
        }
    }
}

/// Game `g` uses deck seed `mix(seed, 2g)` and action seed `mix(seed, 2g+1)`.
pub fn roll_out(catalog: &Arc<TileCatalog>, s: &GenGamesSettings) -> Result<Vec<GameRecord>, CliError> {
    let spec: AgentSpec = s.agent.parse()?;
    let agent = spec.build(s.board_size, select_mode(&s.select)?)?;
    let config = GameConfig { board_size: s.board_size, players: s.players, ..GameConfig::default() };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let agent: &dyn Agent = agent.as_ref();
    let records = (0..s.games)
        .into_par_iter()
        .map(|g| {
            let seats = vec![agent; s.players];
            let g = g as u64;
            play_game(catalog.clone(), config.clone(), mix_seed(s.seed, 2 * g), &seats, mix_seed(s.seed, 2 * g + 1)).map(|o| o.record)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(records)
}

pub fn gen_games(ctx: &mut Ctx, args: &GenGamesArgs) -> Result<(), CliError> {
    let s: GenGamesSettings = resolve(&ctx.file, "gen-games", args)?;
    if s.games == 0 {
        return Err(CliError::Usage("--games must be at least 1".into()));
    }
    ctx.echo("gen-games", &s)?;
    let records = roll_out(&ctx.catalog, &s)?;
    let prov = comment_block(&provenance("gen-games", &GenGamesSettings { out: PathBuf::new(), ..s.clone() }, ctx.catalog.hash()));
    for (g, r) in records.iter().enumerate() {
        write_file(&s.out.join(format!("game-{g:05}.ndjson")), &format!("{prov}{}", r.to_text()))?;
    }
    let turns: usize = records.iter().map(|r| r.turns.len()).sum();
    writeln!(ctx.out, "{} games, {} turns, written to {}", records.len(), turns, s.out.display())?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct GenDatasetArgs {
    /// Record files or directories of `*.ndjson` records.
    #[arg(long, num_args = 1..)]
    pub records: Option<Vec<PathBuf>>,
    /// Dataset file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenDatasetSettings {
    pub records: Vec<PathBuf>,
    pub out: PathBuf,
}

impl Default for GenDatasetSettings {
    fn default() -> Self {
        GenDatasetSettings { records: Vec::new(), out: "runs/dataset.jsonl".into() }
    }
}

/// Files named directly plus every `*.ndjson` inside named directories, sorted.
pub fn record_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("reading {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "ndjson"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn load_record(path: &Path) -> Result<GameRecord, CliError> {
    Ok(GameRecord::load(path).with_context(|| format!("record {}", path.display()))?)
}

pub fn gen_dataset(ctx: &mut Ctx, args: &GenDatasetArgs) -> Result<(), CliError> {
    let s: GenDatasetSettings = resolve(&ctx.file, "gen-dataset", args)?;
    if s.records.is_empty() {
        return Err(CliError::Usage("--records is required".into()));
    }
    ctx.echo("gen-dataset", &s)?;
    let files = record_files(&s.records)?;
    let records = files.iter().map(|f| load_record(f)).collect::<Result<Vec<_>, _>>()?;
    let examples = generate_dataset(&records, ctx.catalog.clone())?;
    let discarded: usize = records.iter().map(discard_count).sum();
    let source = serde_json::json!({ "records": files, "command": "gen-dataset" });
    write_file(&s.out, &write_dataset(&examples, ctx.catalog.hash(), source))?;
    writeln!(ctx.out, "{} examples from {} records ({} discarded draws)", examples.len(), records.len(), discarded)?;
    Ok(())
}

fn discard_count(r: &GameRecord) -> usize {
    r.turns.iter().map(|t| t.discarded.len()).sum::<usize>() + r.final_record.as_ref().map_or(0, |f| f.discarded.len())
}

#[derive(Debug, Args, Serialize)]
pub struct TrainSmArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub embedding: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for gcn.ckpt and metrics.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSmSettings {
    pub dataset: Option<PathBuf>,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub hidden: usize,
    pub embedding: usize,
    pub dropout: f64,
    pub val_fraction: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for TrainSmSettings {
    fn default() -> Self {
        let g = GcnConfig::default();
        TrainSmSettings {
            dataset: None,
            epochs: g.epochs,
            lr: g.lr,
            batch: g.batch,
            hidden: g.arch.d_h,
            embedding: g.arch.d_out,
            dropout: g.arch.dropout,
            val_fraction: g.val_fraction,
            seed: g.seed,
            out: "runs/situation".into(),
        }
    }
}

impl TrainSmSettings {
    pub fn gcn_config(&self, workers: usize) -> GcnConfig {
        GcnConfig {
            arch: GcnArch { d_h: self.hidden, d_out: self.embedding, dropout: self.dropout, ..GcnArch::default() },
            lr: self.lr,
            epochs: self.epochs,
            batch: self.batch,
            seed: self.seed,
            val_fraction: self.val_fraction,
            workers,
        }
    }
}

pub fn train_sm(ctx: &mut Ctx, args: &TrainSmArgs) -> Result<(), CliError> {
    let s: TrainSmSettings = resolve(&ctx.file, "train-sm", args)?;
    let path = s.dataset.clone().ok_or_else(|| CliError::Usage("--dataset is required".into()))?;
    ctx.echo("train-sm", &s)?;
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let (header, examples) = parse_dataset(&text)?;
    if header.catalog_hash != ctx.catalog.hash() {
        return Err(CliError::Runtime(anyhow::anyhow!("dataset was built from catalog {}", header.catalog_hash)));
    }
    let cfg = s.gcn_config(ctx.workers);
    let out = match train_situation_model(&examples, &cfg) {
        Err(saag_situation::SituationError::Config(m)) => return Err(CliError::Usage(m)),
        r => r?,
    };
    let mut csv = comment_block(&provenance("train-sm", &TrainSmSettings { out: PathBuf::new(), ..s.clone() }, ctx.catalog.hash()));
    csv.push_str("epoch,train_loss,val_loss,val_top1,val_top3,baseline_top1\n");
    for e in &out.epochs {
        csv.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            e.epoch, e.train_loss, e.val_loss, e.val_top1, e.val_top3, out.baseline_top1
        ));
    }
    write_file(&s.out.join("metrics.csv"), &csv)?;
    out.params.to_checkpoint().save(s.out.join("gcn.ckpt"))?;
    writeln!(
        ctx.out,
        "{} examples ({} train games, {} validation games), mean candidates {:.2}, uniform top-1 {:.4}",
        examples.len(),
        out.train_games.len(),
        out.val_games.len(),
        out.mean_candidates,
        out.baseline_top1
    )?;
    if let Some(e) = out.epochs.last() {
        writeln!(ctx.out, "epoch {}: val loss {:.4} top-1 {:.4} top-3 {:.4}", e.epoch, e.val_loss, e.val_top1, e.val_top3)?;
    }
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct ExportGraphArgs {
    #[arg(long)]
    pub record: Option<PathBuf>,
    /// Turn index; the graph shows the board before that turn's placement.
    #[arg(long)]
    pub turn: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExportGraphSettings {
    pub record: Option<PathBuf>,
    pub turn: usize,
    pub out: Option<PathBuf>,
}

/// Candidate board for `turn` of a record.
pub fn board_at(ctx: &Ctx, record: &Path, turn: usize) -> Result<CandidateBoard, CliError> {
    let rec = load_record(record)?;
    if turn >= rec.turns.len() {
        return Err(CliError::Usage(format!("record has {} turns; --turn {turn} is out of range", rec.turns.len())));
    }
    let states = replay_states(&rec, ctx.catalog.clone())?;
    let state = &states[turn];
    let tile = state.drawn_tile().context("replayed state has no drawn tile")?;
    Ok(CandidateBoard::from_state(state, tile)?)
}

pub fn export_graph(ctx: &mut Ctx, args: &ExportGraphArgs) -> Result<(), CliError> {
    let s: ExportGraphSettings = resolve(&ctx.file, "export-graph", args)?;
    let record = s.record.clone().ok_or_else(|| CliError::Usage("--record is required".into()))?;
    ctx.echo("export-graph", &s)?;
    let board = board_at(ctx, &record, s.turn)?;
    let text = format!("{}{}", comment_block(&provenance("export-graph", &s, ctx.catalog.hash())), board.to_node_link().to_text());
    match &s.out {
        Some(p) => {
            write_file(p, &text)?;
            writeln!(ctx.out, "{} vertices, {} candidates, written to {}", board.node_count(), board.candidates.len(), p.display())?;
        }
        None => ctx.out.write_all(text.as_bytes())?,
    }
    Ok(())
}
