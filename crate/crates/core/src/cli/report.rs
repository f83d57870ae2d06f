use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

pub const TOOL: &str = "fmtlab";

/// Wrapper around every JSON result: the resolved configuration that
/// produced it, and how long it took. Everything except `duration_s` is a
/// deterministic function of `config`.
#[derive(Debug, Clone, Serialize)]
pub struct ReportEnvelope {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    pub result: Value,
    pub duration_s: f64,
}

impl ReportEnvelope {
    pub fn new(command: &str, config: &impl Serialize, result: &impl Serialize, duration: Duration) -> Result<Self> {
        Ok(ReportEnvelope {
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: to_value(config)?,
            result: to_value(result)?,
            duration_s: duration.as_secs_f64(),
        })
    }
}

fn to_value(v: &impl Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::data(format!("serializing report: {e}")))
}

/// One-line `# fmtlab ...` header that records the command and its config in CSV output.
pub fn csv_header_comment(command: &str, config: &impl Serialize) -> Result<String> {
    let cfg = serde_json::to_string(&to_value(config)?).map_err(|e| Error::data(e.to_string()))?;
    Ok(format!("# {TOOL} {} {command} {cfg}\n", env!("CARGO_PKG_VERSION")))
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

pub fn emit_json(path: Option<&Path>, env: &ReportEnvelope) -> Result<()> {
    let mut s = serde_json::to_string_pretty(env).map_err(|e| Error::data(e.to_string()))?;
    s.push('\n');
    emit(path, &s)
}
