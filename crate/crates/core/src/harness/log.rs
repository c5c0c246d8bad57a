use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metp::{InstanceResult, StepRecord};

/// One CSV summary line per (method, instance).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub instance: usize,
    pub clean_f1: f64,
    pub best_f1: f64,
    pub queries: u64,
    pub steps: u64,
    pub attempts: usize,
    pub k_limit: usize,
    pub interaction_limit: u64,
}

impl SummaryRow {
    pub fn from_result(method: &str, r: &InstanceResult) -> Self {
        Self {
            method: method.to_string(),
            instance: r.instance,
            clean_f1: r.clean_f1,
            best_f1: r.best_f1,
            queries: r.queries,
            steps: r.steps,
            attempts: r.attempts,
            k_limit: r.k_limit,
            interaction_limit: r.interaction_limit,
        }
    }
}

pub fn write_step_log(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_step_log(path: &Path) -> Result<Vec<StepRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}
