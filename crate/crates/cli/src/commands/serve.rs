use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use saag_service::{ParamStore, ServiceConfig, PARAMS_DIR_ENV};

use crate::config::resolve;
use crate::{CliError, Ctx};

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub host: Option<String>,
    /// Checkpoint directory (default: $SAAG_PARAMS_DIR).
    #[arg(long)]
    pub params_dir: Option<PathBuf>,
    /// Directory for append-only session event logs.
    #[arg(long)]
    pub log_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServeSettings {
    pub port: u16,
    pub host: String,
    pub params_dir: Option<PathBuf>,
    pub log_dir: Option<PathBuf>,
}

impl Default for ServeSettings {
    fn default() -> Self {
        ServeSettings { port: 8080, host: "127.0.0.1".into(), params_dir: None, log_dir: None }
    }
}

pub fn serve(ctx: &mut Ctx, args: &ServeArgs) -> Result<(), CliError> {
    let mut s: ServeSettings = resolve(&ctx.file, "serve", args)?;
    if s.params_dir.is_none() {
        s.params_dir = std::env::var_os(PARAMS_DIR_ENV).map(PathBuf::from);
    }
    let addr: SocketAddr = format!("{}:{}", s.host, s.port).parse().map_err(|e| CliError::Usage(format!("bad address: {e}")))?;
    if let Some(dir) = &s.log_dir {
        std::fs::create_dir_all(dir)?;
    }
    ctx.echo("serve", &s)?;
    writeln!(ctx.out, "listening on http://{addr}")?;
    ctx.out.flush()?;
    let config = ServiceConfig { params: ParamStore::new(s.params_dir.clone()), log_dir: s.log_dir.clone() };
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(saag_service::serve(addr, config, ctx.catalog.clone()))?;
    Ok(())
}
