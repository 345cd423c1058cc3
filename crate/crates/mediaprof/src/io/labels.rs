use std::collections::BTreeMap;
use std::path::Path;

use mediaprof_core::eval::Task;
use mediaprof_core::graph::normalize_domain;

use super::{csv_reader, csv_writer, expect_headers, finish_csv, line_of};
use crate::error::{Error, Result};

/// Class indices per domain for both tasks; `None` where the cell is blank.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelTable {
    pub rows: BTreeMap<String, [Option<usize>; 2]>,
}

fn slot(task: Task) -> usize {
    match task {
        Task::Factuality => 0,
        Task::Bias => 1,
    }
}

impl LabelTable {
    pub fn get(&self, domain: &str, task: Task) -> Option<usize> {
        self.rows.get(domain).and_then(|r| r[slot(task)])
    }

    /// Labeled domains for `task`, sorted.
    pub fn for_task(&self, task: Task) -> BTreeMap<String, usize> {
        self.rows
            .iter()
            .filter_map(|(d, r)| r[slot(task)].map(|c| (d.clone(), c)))
            .collect()
    }

    /// Domains carrying at least one label: the annotated seed list.
    pub fn seeds(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|(_, r)| r.iter().any(Option::is_some))
            .map(|(d, _)| d.clone())
            .collect()
    }
}

pub fn read_labels(path: &Path) -> Result<LabelTable> {
    let mut r = csv_reader(path)?;
    expect_headers(path, &mut r, &["domain", "factuality", "bias"])?;
    let mut table = LabelTable::default();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = line_of(&rec);
        if rec.len() != 3 {
            return Err(Error::format(path, line, format!("expected 3 cells, got {}", rec.len())));
        }
        let domain = normalize_domain(&rec[0]).map_err(|e| Error::format(path, line, e.to_string()))?;
        let mut row = [None, None];
        for task in Task::ALL {
            let cell = &rec[1 + slot(task)];
            if cell.is_empty() {
                continue;
            }
            row[slot(task)] = Some(task.class_index(cell).ok_or_else(|| {
                Error::format(
                    path,
                    line,
                    format!("unknown {} label {cell:?} (expected one of {})", task.name(), task.classes().join(", ")),
                )
            })?);
        }
        if table.rows.insert(domain.clone(), row).is_some() {
            return Err(Error::format(path, line, format!("duplicate domain {domain}")));
        }
    }
    Ok(table)
}

pub fn write_labels(path: &Path, table: &LabelTable) -> Result<()> {
    let mut w = csv_writer();
    w.write_record(["domain", "factuality", "bias"])
        .map_err(|e| Error::csv(path, e))?;
    for (d, row) in &table.rows {
        let name = |task: Task| row[slot(task)].map_or("", |c| task.classes()[c]);
        w.write_record([d.as_str(), name(Task::Factuality), name(Task::Bias)])
            .map_err(|e| Error::csv(path, e))?;
    }
    finish_csv(path, w)
}
