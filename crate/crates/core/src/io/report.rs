//! Run reports: a versioned JSON document, plus a flat `key = value` text view.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::atomic_write;
use crate::bench::BenchResult;
use crate::error::{Error, Result};
use crate::workloads::WorkloadReport;

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub format_version: u32,
    pub command: String,
    pub seed: u64,
    /// Effective configuration after merging file and flags.
    pub config: Value,
    #[serde(default)]
    pub workloads: Vec<WorkloadReport>,
    #[serde(default)]
    pub bench: Vec<BenchResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_batch: Option<usize>,
}

impl RunReport {
    pub fn new(command: impl Into<String>, seed: u64, config: Value) -> Self {
        Self {
            format_version: REPORT_FORMAT_VERSION,
            command: command.into(),
            seed,
            config,
            workloads: Vec::new(),
            bench: Vec::new(),
            best_batch: None,
        }
    }
}

pub fn report_to_json(r: &RunReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(r).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn report_from_json(text: &str, origin: &Path) -> Result<RunReport> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::format(origin, "missing format_version"))?;
    if version != REPORT_FORMAT_VERSION as u64 {
        return Err(Error::UnsupportedVersion(u32::try_from(version).unwrap_or(u32::MAX)));
    }
    serde_json::from_value(value).map_err(|e| Error::format(origin, e.to_string()))
}

pub fn write_report(r: &RunReport, path: &Path) -> Result<()> {
    atomic_write(path, report_to_json(r)?.as_bytes())
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    report_from_json(&fs::read_to_string(path)?, path)
}

/// Every scalar leaf as `(dotted.path, json-literal)`, in document order.
pub fn flatten(value: &Value) -> Vec<(String, String)> {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        let join = |key: &str| {
            if prefix.is_empty() {
                key.to_string()
            } else {
                format!("{prefix}.{key}")
            }
        };
        match v {
            Value::Object(map) => {
                for (k, child) in map {
                    walk(&join(k), child, out);
                }
            }
            Value::Array(items) => {
                if items.is_empty() {
                    out.push((prefix.to_string(), "[]".into()));
                }
                for (k, child) in items.iter().enumerate() {
                    walk(&join(&k.to_string()), child, out);
                }
            }
            leaf => out.push((prefix.to_string(), leaf.to_string())),
        }
    }
    let mut out = Vec::new();
    walk("", value, &mut out);
    out
}

/// The flat text view of a report, one `path = value` line per leaf.
pub fn report_to_text(r: &RunReport) -> Result<String> {
    let value = serde_json::to_value(r).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut s = String::new();
    for (k, v) in flatten(&value) {
        s.push_str(&k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    }
    Ok(s)
}

/// Parses the text view back into `(path, value)` pairs.
pub fn parse_text(text: &str) -> Result<Vec<(String, Value)>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (k, v) = l
                .split_once(" = ")
                .ok_or_else(|| Error::InvalidArgument(format!("malformed report line {l:?}")))?;
            let v: Value = if v == "[]" {
                Value::Array(Vec::new())
            } else {
                serde_json::from_str(v).map_err(|e| Error::InvalidArgument(format!("{l:?}: {e}")))?
            };
            Ok((k.to_string(), v))
        })
        .collect()
}
