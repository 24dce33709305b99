use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Record of one invocation: enough to rerun it bit-for-bit.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub master_seed: Option<u64>,
    pub config: Value,
    pub items: Vec<Value>,
}

impl RunManifest {
    pub fn new(command: &str, master_seed: Option<u64>, config: impl Serialize) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            config: serde_json::to_value(config).expect("config serialises"),
            items: Vec::new(),
        }
    }

    pub fn push(&mut self, item: impl Serialize) {
        self.items.push(serde_json::to_value(item).expect("item serialises"));
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        std::fs::write(path, text + "\n").map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// `<path>.run.json` next to an output file.
pub fn sidecar(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".run.json");
    s.into()
}
