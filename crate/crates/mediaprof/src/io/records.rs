use std::fs;
use std::path::Path;

use mediaprof_core::graph::OverlapRecord;

use super::write_bytes;
use crate::error::{Error, Result};

/// One JSON object per line; blank lines are skipped.
pub fn read_records(path: &Path) -> Result<Vec<OverlapRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: OverlapRecord = serde_json::from_str(line)
            .map_err(|e| Error::format(path, i as u64 + 1, e.to_string()))?;
        record
            .validate()
            .map_err(|e| Error::format(path, i as u64 + 1, e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_records(path: &Path, records: &[OverlapRecord]) -> Result<()> {
    let mut bytes = Vec::new();
    for r in records {
        serde_json::to_writer(&mut bytes, r).map_err(|e| Error::json(path, e))?;
        bytes.push(b'\n');
    }
    write_bytes(path, &bytes)
}
