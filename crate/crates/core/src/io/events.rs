//! Event tables: comma-separated text with the canonical 57-column header and
//! an optional trailing `is_anomaly` column.

use std::path::Path;

use crate::error::{Error, Result};
use crate::ref_models::{feature_names, EventRecord, FEATURES_PER_EVENT};

use super::atomic_write;

pub const ANOMALY_COLUMN: &str = "is_anomaly";

/// Events with optional ground-truth anomaly flags.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventTable {
    pub events: Vec<EventRecord>,
    pub is_anomaly: Option<Vec<bool>>,
}

impl EventTable {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn anomaly_count(&self) -> Option<usize> {
        self.is_anomaly.as_ref().map(|f| f.iter().filter(|&&a| a).count())
    }
}

/// Nine significant digits in scientific notation.
pub fn format_value(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn save_events(table: &EventTable, path: &Path) -> Result<()> {
    if let Some(flags) = &table.is_anomaly {
        if flags.len() != table.events.len() {
            return Err(Error::dims("anomaly flags", table.events.len(), flags.len()));
        }
    }
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header = feature_names();
    if table.is_anomaly.is_some() {
        header.push(ANOMALY_COLUMN.into());
    }
    let csv_err = |e: csv::Error| Error::format(path, e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for (k, e) in table.events.iter().enumerate() {
        let mut row: Vec<String> = e.features().iter().map(|&v| format_value(v)).collect();
        if let Some(flags) = &table.is_anomaly {
            row.push(if flags[k] { "1" } else { "0" }.into());
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format(path, e.to_string()))?;
    atomic_write(path, &bytes)
}

pub fn load_events(path: &Path) -> Result<EventTable> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let header = r.headers().map_err(|e| Error::format(path, e.to_string()))?.clone();
    let names = feature_names();
    let with_flags = match header.len() {
        n if n == FEATURES_PER_EVENT => false,
        n if n == FEATURES_PER_EVENT + 1 => true,
        n => {
            return Err(Error::format(
                path,
                format!("header has {n} columns, expected {FEATURES_PER_EVENT} or {}", FEATURES_PER_EVENT + 1),
            ))
        }
    };
    for (k, (got, want)) in header.iter().zip(&names).enumerate() {
        if got.trim() != want {
            return Err(Error::format(path, format!("column {k} is {got:?}, expected {want:?}")));
        }
    }
    if with_flags && header[FEATURES_PER_EVENT].trim() != ANOMALY_COLUMN {
        return Err(Error::format(
            path,
            format!("last column is {:?}, expected {ANOMALY_COLUMN:?}", &header[FEATURES_PER_EVENT]),
        ));
    }
    let mut table = EventTable {
        events: Vec::new(),
        is_anomaly: with_flags.then(Vec::new),
    };
    for (row_index, record) in r.records().enumerate() {
        let line = row_index + 2;
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        if record.len() != header.len() {
            return Err(Error::format(
                path,
                format!("line {line}: {} columns, expected {}", record.len(), header.len()),
            ));
        }
        let mut values = Vec::with_capacity(FEATURES_PER_EVENT);
        for (col, cell) in record.iter().take(FEATURES_PER_EVENT).enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::format(path, format!("line {line}, column {}: {cell:?} is not a number", names[col]))
            })?;
            values.push(v);
        }
        let event = EventRecord::from_slice(&values)
            .map_err(|e| Error::format(path, format!("line {line}: {e}")))?;
        table.events.push(event);
        if let Some(flags) = table.is_anomaly.as_mut() {
            let flag = match record[FEATURES_PER_EVENT].trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::format(
                        path,
                        format!("line {line}: {ANOMALY_COLUMN} must be 0 or 1, got {other:?}"),
                    ))
                }
            };
            flags.push(flag);
        }
    }
    Ok(table)
}
