//! Flag values layered over an optional flat TOML file whose keys are the
//! long flag names. Flags win; unknown keys are an error.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

pub fn resolve<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> Result<T, CliError> {
    let mut merged = serde_json::to_value(flags).map_err(|e| CliError::internal(e.to_string()))?;
    if let Some(path) = config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let from_file: T = toml::Value::Table(table)
            .try_into()
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let mut base = serde_json::to_value(from_file).map_err(|e| CliError::internal(e.to_string()))?;
        if let (Some(base_map), Some(over)) = (base.as_object_mut(), merged.as_object()) {
            for (k, v) in over {
                if !v.is_null() {
                    base_map.insert(k.clone(), v.clone());
                }
            }
        }
        merged = base;
    }
    serde_json::from_value(merged).map_err(|e| CliError::usage(e.to_string()))
}

pub fn require<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
    value
        .as_ref()
        .ok_or_else(|| CliError::usage(format!("missing required --{flag} (flag or config key)")))
}

pub fn existing_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!("{}: no such file", path.display())))
    }
}

pub fn existing_dir(path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::usage(format!("{}: no such directory", path.display())))
    }
}

pub fn output_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}
