//! One function per subcommand, each with its flags and resolved settings.

mod data;
mod eval;
mod gaze;
mod selfplay;
mod serve;

pub use data::*;
pub use eval::*;
pub use gaze::*;
pub use selfplay::*;
pub use serve::*;

use std::path::Path;

use anyhow::Context;

use crate::CliError;

/// Writes `text` to `path`, creating parent directories.
pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub(crate) fn provenance<T: serde::Serialize>(command: &str, settings: &T, catalog_hash: &str) -> Vec<String> {
    vec![
        format!("saag {command} {}", env!("CARGO_PKG_VERSION")),
        format!("config {}", serde_json::to_string(settings).expect("settings serialize")),
        format!("catalog {catalog_hash}"),
    ]
}

pub(crate) fn comment_block(lines: &[String]) -> String {
    lines.iter().map(|l| format!("# {l}\n")).collect()
}
