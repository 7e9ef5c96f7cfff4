//! `saag` command-line entry point: training, rollouts, datasets, the
//! situation model, evaluation, the game service and gaze reports.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use saag_core::TileCatalog;

pub mod agents;
pub mod commands;
pub mod config;

use commands::*;
use config::ConfigFile;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation; exit code 2.
    Usage(String),
    /// Failure while running; exit code 1.
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "saag", version, about = "Carcassonne agents, situation model and gaze analytics")]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for rollouts and datasets (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Tile catalog file (default: the built-in base game).
    #[arg(long, global = true)]
    pub catalog: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy by self-play (single or adversarial).
    Selfplay(SelfplayArgs),
    /// Roll out games and write one record per game.
    GenGames(GenGamesArgs),
    /// Turn game records into situation examples.
    GenDataset(GenDatasetArgs),
    /// Train the situation model on a dataset.
    TrainSm(TrainSmArgs),
    /// Compare two agents.
    Eval(EvalArgs),
    /// Start the game service.
    Serve(ServeArgs),
    /// Heatmap and gaze graph from a gaze log.
    GazeReport(GazeReportArgs),
    /// Candidate-board graph of one turn of a record.
    ExportGraph(ExportGraphArgs),
}

/// Shared state handed to each subcommand.
pub struct Ctx<'a> {
    pub file: ConfigFile,
    pub workers: usize,
    pub catalog: Arc<TileCatalog>,
    pub out: &'a mut (dyn Write + Send),
    pub err: &'a mut (dyn Write + Send),
}

impl Ctx<'_> {
    /// Prints the resolved settings so a run can be repeated.
    pub fn echo<T: serde::Serialize>(&mut self, command: &str, settings: &T) -> Result<(), CliError> {
        writeln!(self.err, "saag {command} config: {}", serde_json::to_string(settings)?)?;
        Ok(())
    }
}

/// Runs `argv` with the process's stdout and stderr; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (mut out, mut err) = (std::io::stdout(), std::io::stderr());
    run_with(argv, &mut out, &mut err)
}

pub fn run_with<I, T>(argv: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            let _ = match &e {
                CliError::Usage(m) => writeln!(err, "usage error: {m}"),
                CliError::Runtime(m) => writeln!(err, "error: {m:#}"),
            };
            code
        }
    }
}

fn dispatch(cli: Cli, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let file = ConfigFile::load(cli.config.as_deref())?;
    let workers = match cli.workers {
        Some(w) => w,
        None => file.workers()?.unwrap_or(0),
    };
    let catalog = match &cli.catalog {
        Some(p) => Arc::new(TileCatalog::load(p).map_err(|e| CliError::Usage(format!("catalog {}: {e}", p.display())))?),
        None => Arc::new(TileCatalog::base()),
    };
    let mut ctx = Ctx { file, workers, catalog, out, err };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CliError::Runtime(e.into()))?;
    pool.install(|| match cli.command {
        Command::Selfplay(a) => selfplay(&mut ctx, &a),
        Command::GenGames(a) => gen_games(&mut ctx, &a),
        Command::GenDataset(a) => gen_dataset(&mut ctx, &a),
        Command::TrainSm(a) => train_sm(&mut ctx, &a),
        Command::Eval(a) => eval(&mut ctx, &a),
        Command::Serve(a) => serve(&mut ctx, &a),
        Command::GazeReport(a) => gaze_report(&mut ctx, &a),
        Command::ExportGraph(a) => export_graph(&mut ctx, &a),
    })
}
