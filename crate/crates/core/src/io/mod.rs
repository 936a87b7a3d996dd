//! On-disk formats for weights, events and run reports.
//!
//! Every writer goes through a temporary file in the destination directory
//! that is renamed into place, so readers never observe partial files.

mod events;
mod report;
mod weights;

use std::io::Write;
use std::path::Path;

pub use events::{format_value, load_events, save_events, EventTable, ANOMALY_COLUMN};
pub use report::{
    flatten, parse_text, read_report, report_from_json, report_to_json, report_to_text, write_report, RunReport,
    REPORT_FORMAT_VERSION,
};
pub use weights::{load_mlp, load_rbm, load_weights, save_weights, ModelKind, ModelParams, Precision};

use crate::error::Result;

/// Replaces `path` with `bytes` via a temporary sibling and a rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
