//! JSON envelopes, CSV tables and the exit status of a set of reports.

use std::path::{Path, PathBuf};

use leray_core::EstimateReport;
use serde_json::{Map, Value};

/// Output directory plus the provenance stamped into every JSON file.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
}

pub const TOOL: &str = "leray";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

impl Artifacts {
    pub fn new(dir: &Path, command: &str, config_digest: String, seed: u64) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), command: command.to_string(), config_digest, seed })
    }

    /// Write `name.json`: the payload's fields plus tool, version, command, config digest and seed.
    pub fn write_json(&self, name: &str, payload: Value) -> anyhow::Result<PathBuf> {
        let mut map = match payload {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("payload".into(), other);
                m
            }
        };
        map.insert("tool".into(), TOOL.into());
        map.insert("version".into(), VERSION.into());
        map.insert("command".into(), self.command.clone().into());
        map.insert("config_digest".into(), self.config_digest.clone().into());
        map.insert("seed".into(), self.seed.into());
        let path = self.dir.join(format!("{name}.json"));
        let mut text = serde_json::to_string_pretty(&Value::Object(map))?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

/// Shortest round-trip decimal form (`1e300`, not 301 digits); `nan`, `inf`, `-inf` otherwise.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        serde_json::Number::from_f64(x).map_or_else(|| x.to_string(), |n| n.to_string())
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Comma-separated table with a header row and LF line endings.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per report, tagged with the name of the group it came from.
pub fn write_reports_csv(path: &Path, groups: &[(String, Vec<EstimateReport>)]) -> anyhow::Result<()> {
    let rows: Vec<Vec<String>> = groups
        .iter()
        .flat_map(|(source, reports)| {
            reports.iter().map(move |r| {
                let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
                vec![
                    source.clone(),
                    r.name.clone(),
                    status,
                    num(r.lhs),
                    num(r.rhs),
                    num(r.ratio),
                    num(r.slack),
                    r.digest.clone(),
                ]
            })
        })
        .collect();
    write_csv(path, &["source", "name", "status", "lhs", "rhs", "ratio", "slack", "digest"], &rows)
}

/// 2 if any report failed, 0 otherwise.
pub fn exit_status(reports: &[EstimateReport]) -> i32 {
    if reports.iter().any(|r| r.status.is_failure()) {
        crate::commands::EXIT_FAILED_CHECK
    } else {
        crate::commands::EXIT_OK
    }
}
