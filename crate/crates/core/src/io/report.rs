//! CSV reports.
//!
//! Per-run files have the columns `dataset,method,train_fraction,seed,oa,kappa`;
//! aggregate files have one row per (dataset, method, fraction) with the
//! mean and sample standard deviation over seeds. Floats are written in
//! shortest round-trip form, so reading a report back yields the exact values.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{AggregateRow, ReportTable, RunRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub dataset: String,
    pub method: String,
    pub train_fraction: f64,
    pub seed: u64,
    pub oa: f64,
    pub kappa: f64,
}

impl From<&RunRecord> for RunRow {
    fn from(r: &RunRecord) -> Self {
        Self {
            dataset: r.dataset.clone(),
            method: r.method.clone(),
            train_fraction: r.train_fraction,
            seed: r.seed,
            oa: r.oa,
            kappa: r.kappa,
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Encode(format!("csv: {e}"))
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row).map_err(csv_error)?;
    }
    writer.flush().map_err(|e| Error::Encode(e.to_string()))
}

fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(input: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(input).deserialize().collect::<std::result::Result<Vec<T>, _>>().map_err(csv_error)
}

pub fn write_runs_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    write_rows(out, records.iter().map(RunRow::from))
}

pub fn write_aggregate_csv<W: Write>(table: &ReportTable, out: W) -> Result<()> {
    write_rows(out, &table.rows)
}

pub fn read_runs_csv<R: Read>(input: R) -> Result<Vec<RunRow>> {
    read_rows(input)
}

pub fn read_aggregate_csv<R: Read>(input: R) -> Result<Vec<AggregateRow>> {
    read_rows(input)
}

pub fn save_runs_csv(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = Vec::new();
    write_runs_csv(records, &mut bytes)?;
    super::write_bytes(&bytes, path.as_ref())
}

pub fn save_aggregate_csv(table: &ReportTable, path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = Vec::new();
    write_aggregate_csv(table, &mut bytes)?;
    super::write_bytes(&bytes, path.as_ref())
}
