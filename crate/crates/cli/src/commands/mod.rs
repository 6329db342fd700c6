pub mod bayes;
pub mod estimate;
pub mod fisher;
pub mod simulate;
pub mod wtd;

use std::path::Path;

use anyhow::{Context, Result};
use photocount::record_io;
use photocount::trajectory::ClickRecord;
use photocount::Theta;
use serde_json::Value;

use crate::settings::Settings;

/// Resolved settings with the subcommand name, as written into headers.
pub fn config_json(command: &str, settings: &Settings) -> Value {
    let mut v = settings.resolved();
    if let Value::Object(map) = &mut v {
        map.insert("command".into(), Value::String(command.into()));
    }
    v
}

pub fn parse_theta(s: &str) -> Result<Theta> {
    s.parse::<Theta>().map_err(|e| anyhow::anyhow!("{e}"))
}

/// Reads a record written by `simulate`, or a bare record in either format.
pub fn load_record(path: &Path) -> Result<ClickRecord> {
    let is_json = path.extension().is_some_and(|e| e == "json");
    if is_json {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let inner = value.get("record").cloned().unwrap_or(value);
        let record: ClickRecord = serde_json::from_value(inner).with_context(|| format!("parsing {}", path.display()))?;
        record.validate()?;
        Ok(record)
    } else {
        if !path.exists() {
            anyhow::bail!("record file {} does not exist", path.display());
        }
        Ok(record_io::load(path)?)
    }
}
