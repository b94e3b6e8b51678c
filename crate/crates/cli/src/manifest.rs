use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

/// Record written beside every command's outputs: what ran, with which
/// resolved settings, on which inputs, producing which files.
pub struct Manifest {
    command: &'static str,
    settings: Value,
    inputs: Vec<Value>,
    outputs: Vec<String>,
    results: serde_json::Map<String, Value>,
}

impl Manifest {
    pub fn new(command: &'static str, settings: &impl Serialize) -> Self {
        Self {
            command,
            settings: serde_json::to_value(settings).unwrap_or(Value::Null),
            inputs: Vec::new(),
            outputs: Vec::new(),
            results: serde_json::Map::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        let bytes = std::fs::metadata(path).map(|m| m.len()).ok();
        self.inputs.push(json!({ "path": path.display().to_string(), "bytes": bytes }));
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn write(&self, path: &Path) -> Result<PathBuf, CliError> {
        let doc = json!({
            "tool": "sppi",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "settings": self.settings,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "results": self.results,
        });
        let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::internal(e.to_string()))?;
        write_text(path, &(text + "\n"))?;
        Ok(path.to_path_buf())
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::internal(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}
