//! The `fr-1` report envelope shared by every subcommand.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA: &str = "fr-1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub tool_version: String,
    pub command: Vec<String>,
    pub input: Value,
    pub outputs: Value,
    pub tolerances: Value,
    pub wall_time: f64,
}

impl Report {
    pub fn new(command: Vec<String>, input: Value, outputs: Value, tolerances: Value, wall_time: f64) -> Self {
        Report {
            schema: SCHEMA.into(),
            tool_version: fractal_renorm::TOOL_VERSION.into(),
            command,
            input,
            outputs,
            tolerances,
            wall_time,
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

/// Writes `text` to `out`, or to stdout when no path is given.
pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// A labelled numeric table rendered as CSV.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}
