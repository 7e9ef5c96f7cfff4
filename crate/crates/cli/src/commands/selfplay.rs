use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use saag_agent::{metrics_csv, train, TrainConfig};

use super::{provenance, write_file};
use crate::config::resolve;
use crate::{CliError, Ctx};

#[derive(Debug, Args, Serialize)]
pub struct SelfplayArgs {
    /// single or adversarial
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub board_size: Option<usize>,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub entropy: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[arg(long)]
    pub pool_size: Option<usize>,
    #[arg(long)]
    pub swap_interval: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for metrics.csv and policy.ckpt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelfplaySettings {
    #[serde(flatten)]
    pub train: TrainConfig,
    pub out: PathBuf,
}

impl Default for SelfplaySettings {
    fn default() -> Self {
        SelfplaySettings { train: TrainConfig { lr: 3e-3, episodes: 3000, checkpoint_every: 300, ..TrainConfig::default() }, out: "runs/selfplay".into() }
    }
}

pub fn selfplay(ctx: &mut Ctx, args: &SelfplayArgs) -> Result<(), CliError> {
    let mut s: SelfplaySettings = resolve(&ctx.file, "selfplay", args)?;
    s.train.workers = ctx.workers;
    s.train.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    ctx.echo("selfplay", &s)?;
    let out = train(ctx.catalog.clone(), &s.train)?;
    // worker count does not change results
    let prov = provenance("selfplay", &TrainConfig { workers: 0, ..s.train.clone() }, ctx.catalog.hash());
    let csv = metrics_csv(&prov, &out.metrics);
    write_file(&s.out.join("metrics.csv"), &csv)?;
    out.params.to_checkpoint().save(s.out.join("policy.ckpt"))?;
    writeln!(ctx.out, "{} games, {} steps ({:.1} per game)", out.games, out.steps, out.steps as f64 / out.games.max(1) as f64)?;
    if let Some(last) = out.metrics.last() {
        writeln!(
            ctx.out,
            "last checkpoint: cities {:.3} meeples {:.3} point turns {:.3} score {:.3}",
            last.cities_completed, last.meeples_remaining, last.point_turns, last.final_score
        )?;
    }
    writeln!(ctx.out, "wrote {}", s.out.display())?;
    Ok(())
}
