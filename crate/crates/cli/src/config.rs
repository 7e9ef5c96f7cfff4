//! Settings resolution: defaults, then the config file section, then flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Parsed optional TOML config file.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    root: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<ConfigFile, CliError> {
        let Some(path) = path else { return Ok(ConfigFile::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        ConfigFile::parse(&text)
    }

    pub fn parse(text: &str) -> Result<ConfigFile, CliError> {
        let table: toml::Table = toml::from_str(text).map_err(|e| CliError::Usage(format!("config file: {e}")))?;
        match serde_json::to_value(table).map_err(|e| CliError::Usage(e.to_string()))? {
            Value::Object(root) => Ok(ConfigFile { root }),
            _ => Err(CliError::Usage("config file must be a table".into())),
        }
    }

    pub fn workers(&self) -> Result<Option<usize>, CliError> {
        match self.root.get("workers") {
            None => Ok(None),
            Some(v) => v.as_u64().map(|n| Some(n as usize)).ok_or_else(|| CliError::Usage("workers must be a non-negative integer".into())),
        }
    }

    fn section(&self, name: &str) -> Result<Map<String, Value>, CliError> {
        match self.root.get(name) {
            None => Ok(Map::new()),
            Some(Value::Object(m)) => Ok(m.clone()),
            Some(_) => Err(CliError::Usage(format!("config section [{name}] must be a table"))),
        }
    }
}

/// `T::default()` overlaid with `[section]` of the file, then with every
/// flag that was given.
pub fn resolve<T, F>(file: &ConfigFile, section: &str, flags: &F) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned + Default,
    F: Serialize,
{
    let Value::Object(mut merged) = serde_json::to_value(T::default()).expect("settings serialize") else {
        unreachable!("settings are structs")
    };
    for (k, v) in file.section(section)? {
        if !merged.contains_key(&k) {
            return Err(CliError::Usage(format!("unknown key '{k}' in config section [{section}]")));
        }
        merged.insert(k, v);
    }
    if let Value::Object(given) = serde_json::to_value(flags).expect("flags serialize") {
        for (k, v) in given {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("[{section}] {e}")))
}
