use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};

use saag_core::gaze::{attach, fixations, heatmap, parse_log, DEFAULT_DISPERSION, DEFAULT_MIN_DURATION_MS};

use super::{board_at, comment_block, provenance, write_file};
use crate::config::resolve;
use crate::{CliError, Ctx};

#[derive(Debug, Args, Serialize)]
pub struct GazeReportArgs {
    /// Gaze log: `t_ms, x, y, valid` per line.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub board_size: Option<usize>,
    /// Exponential decay half-life for the heatmap (default: none).
    #[arg(long)]
    pub half_life_ms: Option<f64>,
    /// I-DT dispersion threshold in tile units.
    #[arg(long)]
    pub dispersion: Option<f64>,
    /// I-DT minimum fixation duration.
    #[arg(long)]
    pub min_duration_ms: Option<f64>,
    /// Record to attach fixations to, together with --turn.
    #[arg(long)]
    pub record: Option<PathBuf>,
    #[arg(long)]
    pub turn: Option<usize>,
    /// Fixation-to-vertex link radius in tile units.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GazeReportSettings {
    pub log: Option<PathBuf>,
    pub board_size: usize,
    pub half_life_ms: Option<f64>,
    pub dispersion: f64,
    pub min_duration_ms: f64,
    pub record: Option<PathBuf>,
    pub turn: Option<usize>,
    pub radius: f64,
    pub out: PathBuf,
}

impl Default for GazeReportSettings {
    fn default() -> Self {
        GazeReportSettings {
            log: None,
            board_size: saag_core::GameConfig::default().board_size,
            half_life_ms: None,
            dispersion: DEFAULT_DISPERSION,
            min_duration_ms: DEFAULT_MIN_DURATION_MS,
            record: None,
            turn: None,
            radius: 0.5,
            out: "runs/gaze".into(),
        }
    }
}

pub fn gaze_report(ctx: &mut Ctx, args: &GazeReportArgs) -> Result<(), CliError> {
    let s: GazeReportSettings = resolve(&ctx.file, "gaze-report", args)?;
    let log = s.log.clone().ok_or_else(|| CliError::Usage("--log is required".into()))?;
    if s.record.is_some() != s.turn.is_some() {
        return Err(CliError::Usage("--record and --turn go together".into()));
    }
    if s.board_size == 0 || !(s.dispersion >= 0.0) || !(s.min_duration_ms >= 0.0) || !(s.radius >= 0.0) {
        return Err(CliError::Usage("board size, thresholds and radius must be non-negative".into()));
    }
    ctx.echo("gaze-report", &s)?;
    let text = std::fs::read_to_string(&log).with_context(|| format!("reading {}", log.display()))?;
    let trace = parse_log(&text)?;
    let hm = heatmap(&trace, s.board_size, s.half_life_ms);
    let prov = comment_block(&provenance("gaze-report", &GazeReportSettings { out: PathBuf::new(), ..s.clone() }, ctx.catalog.hash()));
    write_file(&s.out.join("heatmap.csv"), &format!("{prov}{}", hm.to_csv()))?;
    let graph = fixations(&trace, s.dispersion, s.min_duration_ms);
    write_file(&s.out.join("gaze_graph.json"), &(serde_json::to_string_pretty(&graph)? + "\n"))?;
    writeln!(
        ctx.out,
        "{} samples, valid dwell {:.1} ms, on-board mass {:.1}, off-board {:.1}; {} fixations, {} saccades",
        trace.len(),
        trace.valid_dwell_ms(),
        hm.mass(),
        hm.off_board,
        graph.fixations.len(),
        graph.saccades.len()
    )?;
    if let (Some(record), Some(turn)) = (&s.record, s.turn) {
        let board = board_at(ctx, record, turn)?;
        let fused = attach(&graph, &board, s.radius);
        write_file(&s.out.join("attached.graph"), &format!("{prov}{}", fused.to_text()))?;
        writeln!(ctx.out, "attached graph: {} nodes, {} edges", fused.nodes.len(), fused.edges.len())?;
    }
    writeln!(ctx.out, "wrote {}", s.out.display())?;
    Ok(())
}
